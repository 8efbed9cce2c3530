#pragma once

#include <cstddef>
#include <vector>

#include "sim3align/geometry.hpp"

namespace sim3align {

/// A camera pose at a point in time. The pose maps the camera frame into
/// the trajectory's own world frame (camera-to-world).
struct TimedPose {
    double timestamp = 0.0;  // seconds
    Sim3Transform pose;
};

using Trajectory = std::vector<TimedPose>;

/// Polyline length over the pose translations, in the trajectory's units.
double path_length(const Trajectory& traj);

/// Left-compose every pose with `t`: pose_k' = t * pose_k. Timestamps kept.
Trajectory transform_trajectory(const Sim3Transform& t, const Trajectory& traj);

}  // namespace sim3align
