#pragma once

#include <cstdint>
#include <vector>

#include "sim3align/geometry.hpp"

namespace sim3align {

/// Pinhole intrinsics (no distortion; coefficients are fixed at zero).
/// (u, v) index pixel centers with no half-pixel offset.
struct CameraIntrinsics {
    double fx = 0.0;  // pixels
    double fy = 0.0;  // pixels
    double cx = 0.0;  // pixels
    double cy = 0.0;  // pixels
    int width = 0;    // pixels
    int height = 0;   // pixels

    /// Throws ErrorCode::invalid_argument on violated bounds
    /// (fx, fy > 0; 0 <= cx < width; 0 <= cy < height).
    void validate() const;
};

/// One semi-dense depth measurement: integer pixel plus z-depth along the
/// optical axis, in the owning trajectory's units.
struct DepthSample {
    int u = 0;      // pixel column
    int v = 0;      // pixel row
    double d = 0.0; // depth, > 0
};

struct KeyFrame {
    int id = 0;
    double timestamp = 0.0;     // seconds
    Sim3Transform pose;         // camera-to-trajectory-frame
    std::vector<DepthSample> samples;
};

struct PointCloud {
    std::vector<Vec3> points;
    /// Optional per-point source key-frame id; empty or same size as points.
    std::vector<std::int32_t> source_ids;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

/// Real-valued projection of a camera-frame point.
struct PixelDepth {
    double u = 0.0;
    double v = 0.0;
    double d = 0.0;
};

/// Back-project every sample of `kf` through the inverse intrinsics and the
/// key-frame pose:  x = T * [(u - cx) d / fx, (v - cy) d / fy, d].
/// Output order matches sample order; source_ids are filled with kf.id.
/// Throws ErrorCode::invalid_argument naming the offending sample if a pixel
/// is out of image bounds or a depth is not positive.
PointCloud back_project(const KeyFrame& kf, const CameraIntrinsics& m);

/// Back-project a list of key-frames into one cloud, frame order preserved.
PointCloud back_project_all(const std::vector<KeyFrame>& frames, const CameraIntrinsics& m);

/// Project a camera-frame point to real-valued pixel coordinates and depth.
/// Inverse of back_project for an identity pose. Throws
/// ErrorCode::invalid_argument when the point is not in front of the camera.
PixelDepth forward_project(const Vec3& point, const CameraIntrinsics& m);

/// Apply `t` to every point; order and source ids preserved.
PointCloud transform_cloud(const Sim3Transform& t, const PointCloud& cloud);

}  // namespace sim3align
