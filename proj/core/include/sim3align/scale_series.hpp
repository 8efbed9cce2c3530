#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sim3align/alignment.hpp"

namespace sim3align {

enum class Stage { transient, converging, stable };

const char* to_string(Stage stage);

/// Frame-to-frame squared-displacement ratio series.
///
/// p_k = |t'_{k+1} - t'_k|^2 / |t_{k+1} - t_k|^2 over associated pairs, the
/// squared per-frame scale; sqrt_p carries the physically meaningful scale
/// estimate. Frames where either displacement is shorter than min_step are
/// skipped and recorded.
struct ScaleSeries {
    struct Entry {
        std::size_t k = 0;     // association index of the displacement start
        double p = 0.0;        // squared length ratio
        double sqrt_p = 0.0;   // per-frame scale estimate
        Stage label = Stage::transient;
    };

    std::vector<Entry> factors;
    std::vector<std::size_t> skipped;          // association indices with no defined ratio
    std::optional<std::size_t> stable_start;   // association index, set by the detector
    bool no_stable_window = false;             // detector ran and found nothing

    std::size_t count(Stage stage) const;
};

/// Compute the ratio series. Throws ErrorCode::insufficient_data with fewer
/// than 2 associated pairs. Labels are all transient until the detector runs.
ScaleSeries compute_factors(const TrajectoryPair& pair, double min_step = 1e-6);

/// Default detector parameters: chosen to ride out the bursts the stable
/// stage still shows. Overridable per call and surfaced as CLI flags.
inline constexpr std::size_t kDefaultWindow = 30;
inline constexpr double kDefaultRelTol = 0.1;
inline constexpr double kDefaultMinStep = 1e-6;

/// Find the initialization transient. stable_start becomes the association
/// index of the first entry of the earliest window of `window` consecutive
/// defined factors whose median-relative spread max|p - median| / median is
/// at most rel_tol. Entries are labeled transient / converging / stable in
/// contiguous runs: converging starts at the first window whose spread is
/// within 2x rel_tol. When no window qualifies, stable_start stays empty,
/// no_stable_window is set, and all labels remain transient.
/// Requires series.factors.size() >= window.
void detect_stable_window(ScaleSeries& series, std::size_t window = kDefaultWindow,
                          double rel_tol = kDefaultRelTol);

/// Number of leading associations to drop before alignment: stable_start,
/// or 0 when the detector found no stable window.
std::size_t exclusion_prefix(const ScaleSeries& series);

/// CSV with columns k, p_k, sqrt_p_k, label. Skipped frames have no row.
void write_scale_series_csv(const ScaleSeries& series, std::ostream& out);

}  // namespace sim3align
