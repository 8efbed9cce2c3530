// Closed-form Sim(3) trajectory alignment.
//
// Pipeline:
//   1. centroids of the associated SLAM and reference translations
//   2. centered residuals
//   3. nine product sums S_xx ... S_zz
//   4. symmetric 4x4 N matrix; its top eigenvector is the rotation quaternion
//   5. scale s = sum t'.R(t) / sum |t|^2 over centered vectors
//   6. translation r0 = t'bar - s R(tbar)
//
// Step 5 divides by the SLAM-side (source) sum of squares. Dividing by the
// target-side sum fails the pure-scaling sanity case (t' = 2t would yield
// s = 1/2), so the source-side form is used throughout and the acceptance
// suite encodes it.

#include "sim3align/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sim3align/error.hpp"
#include "sim3align/tolerances.hpp"

namespace sim3align {

namespace {

// Compensated (Kahan) accumulator; summation order is fixed and sequential
// so results are bit-reproducible.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double value) {
        const double y = value - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

double frobenius(const Mat4& m) {
    double s = 0.0;
    for (double v : m) s += v * v;
    return std::sqrt(s);
}

}  // namespace

TrajectoryPair associate(const Trajectory& slam, const Trajectory& reference, double max_dt) {
    if (!(max_dt >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "max_dt must be non-negative");
    }
    TrajectoryPair pair;
    pair.slam = slam;
    pair.reference = reference;

    std::size_t j_min = 0;  // first not-yet-used reference index
    std::size_t j = 0;      // scan cursor; slam timestamps increase, so it never backs up
    for (std::size_t i = 0; i < slam.size() && j_min < reference.size(); ++i) {
        const double t = slam[i].timestamp;
        // First reference index at or after t, restricted to unused suffix.
        if (j < j_min) j = j_min;
        while (j < reference.size() && reference[j].timestamp < t) ++j;
        // Candidates: j and its predecessor.
        std::size_t best = reference.size();
        double best_dt = max_dt;
        if (j < reference.size()) {
            const double dt = std::abs(reference[j].timestamp - t);
            if (dt <= best_dt) {
                best = j;
                best_dt = dt;
            }
        }
        if (j > j_min) {
            const double dt = std::abs(reference[j - 1].timestamp - t);
            if (dt <= best_dt) {
                best = j - 1;
                best_dt = dt;
            }
        }
        if (best < reference.size()) {
            pair.associations.emplace_back(i, best);
            j_min = best + 1;
        }
    }

    if (pair.associations.size() < 3) {
        throw Error(ErrorCode::insufficient_data,
                    "need at least 3 associated pose pairs, got " +
                        std::to_string(pair.associations.size()));
    }
    return pair;
}

std::pair<Vec3, Vec3> centroids(const TrajectoryPair& pair, std::size_t from) {
    if (from >= pair.size()) {
        throw Error(ErrorCode::insufficient_data, "no associated pairs to average");
    }
    KahanSum sx, sy, sz, rx, ry, rz;
    for (std::size_t k = from; k < pair.size(); ++k) {
        const Vec3& t = pair.slam_translation(k);
        const Vec3& tp = pair.reference_translation(k);
        sx.add(t.x);
        sy.add(t.y);
        sz.add(t.z);
        rx.add(tp.x);
        ry.add(tp.y);
        rz.add(tp.z);
    }
    const double n = static_cast<double>(pair.size() - from);
    return {{sx.sum / n, sy.sum / n, sz.sum / n}, {rx.sum / n, ry.sum / n, rz.sum / n}};
}

CrossCovariance cross_covariance(const TrajectoryPair& pair, const Vec3& slam_centroid,
                                 const Vec3& ref_centroid, std::size_t from) {
    KahanSum sums[9];
    for (std::size_t k = from; k < pair.size(); ++k) {
        const Vec3 t = pair.slam_translation(k) - slam_centroid;
        const Vec3 tp = pair.reference_translation(k) - ref_centroid;
        sums[0].add(t.x * tp.x);
        sums[1].add(t.x * tp.y);
        sums[2].add(t.x * tp.z);
        sums[3].add(t.y * tp.x);
        sums[4].add(t.y * tp.y);
        sums[5].add(t.y * tp.z);
        sums[6].add(t.z * tp.x);
        sums[7].add(t.z * tp.y);
        sums[8].add(t.z * tp.z);
    }
    CrossCovariance s;
    s.xx = sums[0].sum;
    s.xy = sums[1].sum;
    s.xz = sums[2].sum;
    s.yx = sums[3].sum;
    s.yy = sums[4].sum;
    s.yz = sums[5].sum;
    s.zx = sums[6].sum;
    s.zy = sums[7].sum;
    s.zz = sums[8].sum;
    return s;
}

Mat4 build_n_matrix(const CrossCovariance& s) {
    const double a = s.xx + s.yy + s.zz;
    const double b = s.xx - s.yy - s.zz;
    const double c = -s.xx + s.yy - s.zz;
    const double d = -s.xx - s.yy + s.zz;
    const double e = s.yz - s.zy;
    const double f = s.xy + s.yx;
    const double g = s.yz + s.zy;
    const double h = s.zx - s.xz;
    const double i = s.zx + s.xz;
    const double j = s.xy - s.yx;

    return Mat4{a, e, h, j,
                e, b, f, i,
                h, f, c, g,
                j, i, g, d};
}

EigenPair4 max_eigenvector_sym4(const Mat4& n) {
    const double frob = frobenius(n);
    for (int r = 0; r < 4; ++r) {
        for (int c = r + 1; c < 4; ++c) {
            if (std::abs(n[static_cast<std::size_t>(4 * r + c)] -
                         n[static_cast<std::size_t>(4 * c + r)]) > tol::kSymmetry * std::max(frob, 1.0)) {
                throw Error(ErrorCode::invalid_argument, "matrix is not symmetric");
            }
        }
    }
    if (frob == 0.0) {
        throw Error(ErrorCode::degenerate, "zero matrix has no distinguished eigenvector");
    }

    double a[4][4];
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) a[r][c] = n[static_cast<std::size_t>(4 * r + c)];
    double v[4][4] = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};

    // Cyclic Jacobi: rotate away each off-diagonal entry in a fixed order
    // until the off-diagonal Frobenius norm falls below the threshold.
    for (int sweep = 0; sweep < tol::kJacobiMaxSweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < 4; ++p)
            for (int q = p + 1; q < 4; ++q) off += 2.0 * a[p][q] * a[p][q];
        if (std::sqrt(off) < tol::kJacobiOffDiagonal * frob) break;

        for (int p = 0; p < 4; ++p) {
            for (int q = p + 1; q < 4; ++q) {
                const double apq = a[p][q];
                if (apq == 0.0) continue;
                const double diff = a[q][q] - a[p][p];
                double t;
                if (std::abs(apq) < 1e-300 * std::abs(diff)) {
                    t = apq / diff;
                } else {
                    const double tau = diff / (2.0 * apq);
                    t = 1.0 / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                    if (tau < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                const double app = a[p][p];
                const double aqq = a[q][q];
                a[p][p] = app - t * apq;
                a[q][q] = aqq + t * apq;
                a[p][q] = a[q][p] = 0.0;
                for (int r = 0; r < 4; ++r) {
                    if (r == p || r == q) continue;
                    const double arp = a[r][p];
                    const double arq = a[r][q];
                    a[r][p] = a[p][r] = c * arp - s * arq;
                    a[r][q] = a[q][r] = s * arp + c * arq;
                }
                for (int r = 0; r < 4; ++r) {
                    const double vrp = v[r][p];
                    const double vrq = v[r][q];
                    v[r][p] = c * vrp - s * vrq;
                    v[r][q] = s * vrp + c * vrq;
                }
            }
        }
    }

    double eigs[4] = {a[0][0], a[1][1], a[2][2], a[3][3]};
    int best = 0;
    for (int i = 1; i < 4; ++i)
        if (eigs[i] > eigs[best]) best = i;

    double sorted[4];
    std::copy(eigs, eigs + 4, sorted);
    std::sort(sorted, sorted + 4);
    const double gap = sorted[3] - sorted[2];
    if (gap <= tol::kEigenGap * frob) {
        throw Error(ErrorCode::degenerate,
                    "ambiguous rotation: top eigenvalue gap " + std::to_string(gap) +
                        " below threshold");
    }

    EigenPair4 result;
    result.eigenvalue = eigs[best];
    result.eigenvector =
        UnitQuaternion::from_unnormalized(v[0][best], v[1][best], v[2][best], v[3][best]);
    return result;
}

double horn_scale(const TrajectoryPair& pair, const Vec3& slam_centroid,
                  const Vec3& ref_centroid, const Rotation3& rotation, std::size_t from) {
    KahanSum num, den;
    for (std::size_t k = from; k < pair.size(); ++k) {
        const Vec3 t = pair.slam_translation(k) - slam_centroid;
        const Vec3 tp = pair.reference_translation(k) - ref_centroid;
        num.add(tp.dot(rotation.apply(t)));
        den.add(t.squared_norm());
    }
    if (den.sum == 0.0) {
        throw Error(ErrorCode::degenerate, "no SLAM motion: scale is undefined");
    }
    const double s = num.sum / den.sum;
    if (!(s > 0.0)) {
        throw Error(ErrorCode::degenerate,
                    "ill-posed scale " + std::to_string(s) + " (sets are reflected or unrelated)");
    }
    return s;
}

Vec3 horn_translation(const Vec3& slam_centroid, const Vec3& ref_centroid, double scale,
                      const Rotation3& rotation) {
    return ref_centroid - rotation.apply(slam_centroid) * scale;
}

AlignmentResult align(const TrajectoryPair& pair, std::size_t exclude_prefix, bool fix_scale) {
    if (pair.size() < exclude_prefix + 3) {
        throw Error(ErrorCode::insufficient_data,
                    "need at least 3 pairs after excluding " + std::to_string(exclude_prefix) +
                        ", have " + std::to_string(pair.size()));
    }
    const std::size_t from = exclude_prefix;

    const auto [slam_c, ref_c] = centroids(pair, from);
    const CrossCovariance s = cross_covariance(pair, slam_c, ref_c, from);
    const EigenPair4 top = max_eigenvector_sym4(build_n_matrix(s));
    const Rotation3 rotation(top.eigenvector);
    const double scale = fix_scale ? 1.0 : horn_scale(pair, slam_c, ref_c, rotation, from);
    const Vec3 translation = horn_translation(slam_c, ref_c, scale, rotation);

    AlignmentResult result;
    result.transform = Sim3Transform(scale, rotation, translation);
    result.n_pairs_used = pair.size() - from;
    result.excluded_prefix = exclude_prefix;

    KahanSum before, after;
    for (std::size_t k = from; k < pair.size(); ++k) {
        const Vec3& t = pair.slam_translation(k);
        const Vec3& tp = pair.reference_translation(k);
        before.add((tp - t).squared_norm());
        after.add((tp - result.transform.apply(t)).squared_norm());
    }
    const double n = static_cast<double>(result.n_pairs_used);
    result.rmse_before = std::sqrt(before.sum / n);
    result.rmse_after = std::sqrt(after.sum / n);
    return result;
}

}  // namespace sim3align
