#include "sim3align/projection.hpp"

#include <cmath>
#include <string>

#include "sim3align/error.hpp"
#include "sim3align/trajectory.hpp"

namespace sim3align {

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "focal lengths must be positive");
    }
    if (width <= 0 || height <= 0) {
        throw Error(ErrorCode::invalid_argument, "image dimensions must be positive");
    }
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
        throw Error(ErrorCode::invalid_argument, "principal point must lie inside the image");
    }
}

PointCloud back_project(const KeyFrame& kf, const CameraIntrinsics& m) {
    m.validate();
    PointCloud cloud;
    cloud.points.reserve(kf.samples.size());
    cloud.source_ids.reserve(kf.samples.size());
    for (std::size_t i = 0; i < kf.samples.size(); ++i) {
        const DepthSample& s = kf.samples[i];
        if (s.u < 0 || s.u >= m.width || s.v < 0 || s.v >= m.height) {
            throw Error(ErrorCode::invalid_argument,
                        "key-frame " + std::to_string(kf.id) + " sample " + std::to_string(i) +
                            ": pixel (" + std::to_string(s.u) + ", " + std::to_string(s.v) +
                            ") outside " + std::to_string(m.width) + "x" +
                            std::to_string(m.height) + " image");
        }
        if (!(s.d > 0.0) || !std::isfinite(s.d)) {
            throw Error(ErrorCode::invalid_argument,
                        "key-frame " + std::to_string(kf.id) + " sample " + std::to_string(i) +
                            ": depth must be positive, got " + std::to_string(s.d));
        }
        const Vec3 ray{(s.u - m.cx) * s.d / m.fx, (s.v - m.cy) * s.d / m.fy, s.d};
        cloud.points.push_back(kf.pose.apply(ray));
        cloud.source_ids.push_back(kf.id);
    }
    return cloud;
}

PointCloud back_project_all(const std::vector<KeyFrame>& frames, const CameraIntrinsics& m) {
    PointCloud cloud;
    for (const KeyFrame& kf : frames) {
        PointCloud part = back_project(kf, m);
        cloud.points.insert(cloud.points.end(), part.points.begin(), part.points.end());
        cloud.source_ids.insert(cloud.source_ids.end(), part.source_ids.begin(),
                                part.source_ids.end());
    }
    return cloud;
}

PixelDepth forward_project(const Vec3& point, const CameraIntrinsics& m) {
    m.validate();
    if (!(point.z > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "point is behind the camera (z <= 0)");
    }
    return {m.fx * point.x / point.z + m.cx, m.fy * point.y / point.z + m.cy, point.z};
}

PointCloud transform_cloud(const Sim3Transform& t, const PointCloud& cloud) {
    PointCloud out;
    out.points.reserve(cloud.points.size());
    out.source_ids = cloud.source_ids;
    for (const Vec3& p : cloud.points) out.points.push_back(t.apply(p));
    return out;
}

double path_length(const Trajectory& traj) {
    double length = 0.0;
    for (std::size_t i = 1; i < traj.size(); ++i) {
        length += distance(traj[i].pose.translation(), traj[i - 1].pose.translation());
    }
    return length;
}

Trajectory transform_trajectory(const Sim3Transform& t, const Trajectory& traj) {
    Trajectory out;
    out.reserve(traj.size());
    for (const TimedPose& tp : traj) out.push_back({tp.timestamp, t * tp.pose});
    return out;
}

}  // namespace sim3align
