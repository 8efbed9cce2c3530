#include "sim3align/scale_series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "sim3align/error.hpp"

namespace sim3align {

const char* to_string(Stage stage) {
    switch (stage) {
        case Stage::transient: return "transient";
        case Stage::converging: return "converging";
        case Stage::stable: return "stable";
    }
    return "?";
}

std::size_t ScaleSeries::count(Stage stage) const {
    return static_cast<std::size_t>(
        std::count_if(factors.begin(), factors.end(),
                      [stage](const Entry& e) { return e.label == stage; }));
}

ScaleSeries compute_factors(const TrajectoryPair& pair, double min_step) {
    if (pair.size() < 2) {
        throw Error(ErrorCode::insufficient_data,
                    "need at least 2 associated pairs to form a displacement ratio");
    }
    ScaleSeries series;
    series.factors.reserve(pair.size() - 1);
    for (std::size_t k = 0; k + 1 < pair.size(); ++k) {
        const Vec3 d_slam = pair.slam_translation(k + 1) - pair.slam_translation(k);
        const Vec3 d_ref = pair.reference_translation(k + 1) - pair.reference_translation(k);
        if (d_slam.norm() < min_step || d_ref.norm() < min_step) {
            series.skipped.push_back(k);
            continue;
        }
        const double p = d_ref.squared_norm() / d_slam.squared_norm();
        series.factors.push_back({k, p, std::sqrt(p), Stage::transient});
    }
    return series;
}

namespace {

// max |p - median| / median over `window` entries starting at `begin`.
// An all-zero window counts as perfectly stable.
double window_spread(const std::vector<ScaleSeries::Entry>& factors, std::size_t begin,
                     std::size_t window, std::vector<double>& scratch) {
    scratch.clear();
    for (std::size_t i = begin; i < begin + window; ++i) scratch.push_back(factors[i].p);
    std::sort(scratch.begin(), scratch.end());
    const std::size_t mid = window / 2;
    const double median =
        window % 2 == 1 ? scratch[mid] : 0.5 * (scratch[mid - 1] + scratch[mid]);
    const double max_dev =
        std::max(std::abs(scratch.front() - median), std::abs(scratch.back() - median));
    if (median == 0.0) {
        return max_dev == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return max_dev / median;
}

}  // namespace

void detect_stable_window(ScaleSeries& series, std::size_t window, double rel_tol) {
    if (window == 0) {
        throw Error(ErrorCode::invalid_argument, "window must be positive");
    }
    if (series.factors.size() < window) {
        throw Error(ErrorCode::insufficient_data,
                    "series shorter than the detection window");
    }

    std::vector<double> scratch;
    scratch.reserve(window);

    std::optional<std::size_t> stable_pos;     // position in factors
    std::optional<std::size_t> converge_pos;   // first window within the relaxed bound
    for (std::size_t begin = 0; begin + window <= series.factors.size(); ++begin) {
        const double spread = window_spread(series.factors, begin, window, scratch);
        if (!converge_pos && spread <= 2.0 * rel_tol) converge_pos = begin;
        if (spread <= rel_tol) {
            stable_pos = begin;
            break;
        }
    }

    series.no_stable_window = !stable_pos.has_value();
    if (!stable_pos) {
        series.stable_start.reset();
        for (auto& e : series.factors) e.label = Stage::transient;
        return;
    }

    const std::size_t stable = *stable_pos;
    const std::size_t converge = std::min(converge_pos.value_or(stable), stable);
    for (std::size_t i = 0; i < series.factors.size(); ++i) {
        if (i >= stable) {
            series.factors[i].label = Stage::stable;
        } else if (i >= converge) {
            series.factors[i].label = Stage::converging;
        } else {
            series.factors[i].label = Stage::transient;
        }
    }
    series.stable_start = series.factors[stable].k;
}

std::size_t exclusion_prefix(const ScaleSeries& series) {
    return series.stable_start.value_or(0);
}

void write_scale_series_csv(const ScaleSeries& series, std::ostream& out) {
    out << "k,p_k,sqrt_p_k,label\n";
    out.precision(17);
    for (const auto& e : series.factors) {
        out << e.k << ',' << e.p << ',' << e.sqrt_p << ',' << to_string(e.label) << '\n';
    }
}

}  // namespace sim3align
