#pragma once

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "sim3align/geometry.hpp"
#include "sim3align/trajectory.hpp"

namespace sim3align {

/// 4x4 matrix, row-major.
using Mat4 = std::array<double, 16>;

/// Time-associated trajectories: the SLAM estimate (source) and the
/// reference measurement (target). Associations are strictly increasing in
/// both indices.
struct TrajectoryPair {
    Trajectory slam;
    Trajectory reference;
    std::vector<std::pair<std::size_t, std::size_t>> associations;

    std::size_t size() const { return associations.size(); }
    const Vec3& slam_translation(std::size_t k) const {
        return slam[associations[k].first].pose.translation();
    }
    const Vec3& reference_translation(std::size_t k) const {
        return reference[associations[k].second].pose.translation();
    }
};

/// The nine centered product sums S_ab = sum_i ta_i * tb'_i for
/// a, b in {x, y, z}; source component first, target second.
struct CrossCovariance {
    double xx = 0, xy = 0, xz = 0;
    double yx = 0, yy = 0, yz = 0;
    double zx = 0, zy = 0, zz = 0;
};

struct AlignmentResult {
    Sim3Transform transform;       // maps SLAM frame into the reference frame
    double rmse_before = 0.0;      // identity-transform RMSE over used pairs
    double rmse_after = 0.0;       // RMSE of the fit over used pairs
    std::size_t n_pairs_used = 0;
    std::size_t excluded_prefix = 0;
};

/// Greedy monotone nearest-timestamp matching. Both trajectories must be
/// sorted by timestamp; every returned pair satisfies |dt| <= max_dt.
/// Throws ErrorCode::insufficient_data on fewer than 3 matches.
TrajectoryPair associate(const Trajectory& slam, const Trajectory& reference, double max_dt);

/// Arithmetic means of the associated translation vectors, starting at
/// association index `from`. Throws ErrorCode::insufficient_data when empty.
std::pair<Vec3, Vec3> centroids(const TrajectoryPair& pair, std::size_t from = 0);

/// Centered product sums over associations [from, end).
CrossCovariance cross_covariance(const TrajectoryPair& pair, const Vec3& slam_centroid,
                                 const Vec3& ref_centroid, std::size_t from = 0);

/// The symmetric 4x4 matrix whose top eigenvector is the optimal rotation
/// quaternion. Its diagonal entries sum to zero.
Mat4 build_n_matrix(const CrossCovariance& s);

struct EigenPair4 {
    double eigenvalue = 0.0;
    UnitQuaternion eigenvector;
};

/// Largest eigenvalue and its eigenvector for a symmetric 4x4 matrix,
/// computed by cyclic Jacobi sweeps (tol::kJacobiOffDiagonal,
/// tol::kJacobiMaxSweeps). The eigenvector is returned sign-canonicalized.
/// Throws ErrorCode::invalid_argument when n is not symmetric within
/// tol::kSymmetry, and ErrorCode::degenerate when the top eigenvalue gap is
/// below tol::kEigenGap times the Frobenius norm.
EigenPair4 max_eigenvector_sym4(const Mat4& n);

/// Scale of the fitted similarity:
///   s = sum_i t'_i . R(t_i) / sum_i |t_i|^2
/// over centered translations. The denominator runs over the SLAM (source)
/// set; see the module documentation for why. Throws
/// ErrorCode::degenerate on zero denominator (no motion) or s <= 0.
double horn_scale(const TrajectoryPair& pair, const Vec3& slam_centroid,
                  const Vec3& ref_centroid, const Rotation3& rotation, std::size_t from = 0);

/// Translation of the fitted similarity: r0 = t'bar - s R(tbar).
Vec3 horn_translation(const Vec3& slam_centroid, const Vec3& ref_centroid, double scale,
                      const Rotation3& rotation);

/// Full closed-form pipeline. Drops the first `exclude_prefix` associations
/// (initialization transient), then runs centroids, centered product sums,
/// the N-matrix eigenproblem, scale and translation. With `fix_scale` the
/// scale is pinned to 1 (rigid SE(3) fit).
/// Throws ErrorCode::insufficient_data with fewer than 3 pairs remaining and
/// ErrorCode::degenerate for collinear motion.
AlignmentResult align(const TrajectoryPair& pair, std::size_t exclude_prefix = 0,
                      bool fix_scale = false);

}  // namespace sim3align
