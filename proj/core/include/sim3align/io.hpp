#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sim3align/projection.hpp"
#include "sim3align/trajectory.hpp"

namespace sim3align::io {

/// Version comment written at the top of every text format.
inline constexpr const char* kFormatHeader = "# sim3-align v1";

/// A parsed trajectory file: one pose per line,
///   timestamp tx ty tz qx qy qz qw
/// with '#' comment lines preserved as metadata. Quaternions are stored
/// (x, y, z, w) on disk and renormalized on read.
struct TrajectoryFile {
    Trajectory poses;
    std::vector<std::string> comments;
};

/// Parse a trajectory stream. Throws ErrorCode::parse with the line number
/// on malformed lines, non-monotone timestamps, off-unit quaternions, or a
/// file with no poses at all.
TrajectoryFile read_trajectory(std::istream& in);
TrajectoryFile read_trajectory_file(const std::string& path);

/// Write with shortest round-trip decimal formatting; extra comments appear
/// after the version header.
void write_trajectory(const Trajectory& traj, std::ostream& out,
                      const std::vector<std::string>& comments = {});
void write_trajectory_file(const Trajectory& traj, const std::string& path,
                           const std::vector<std::string>& comments = {});

/// A parsed key-frame file: intrinsics header line
///   fx fy cx cy width height
/// then per key-frame blocks
///   KF id timestamp tx ty tz qx qy qz qw n_samples
/// followed by n_samples lines "u v d".
struct KeyFrameFile {
    CameraIntrinsics intrinsics;
    std::vector<KeyFrame> frames;
};

/// Parse a key-frame stream; all KeyFrame/DepthSample invariants are
/// enforced here, with errors naming the key-frame id and sample index.
KeyFrameFile read_keyframes(std::istream& in);
KeyFrameFile read_keyframes_file(const std::string& path);

void write_keyframes(const KeyFrameFile& data, std::ostream& out);
void write_keyframes_file(const KeyFrameFile& data, const std::string& path);

/// PLY point-cloud output: "element vertex N" with double x y z properties,
/// format ascii 1.0 or binary_little_endian 1.0.
void write_ply(const PointCloud& cloud, std::ostream& out, bool binary);
void write_ply_file(const PointCloud& cloud, const std::string& path, bool binary);

/// Read vertices from an ascii or binary_little_endian PLY. x, y and z may
/// be float or double; other vertex properties and other elements are
/// skipped. Throws ErrorCode::parse on anything malformed.
PointCloud read_ply(std::istream& in);
PointCloud read_ply_file(const std::string& path);

/// A Sim(3) transform as a small key-value text file with keys
/// scale, quaternion (qx qy qz qw) and translation (tx ty tz).
Sim3Transform read_transform(std::istream& in);
Sim3Transform read_transform_file(const std::string& path);

void write_transform(const Sim3Transform& t, std::ostream& out);
void write_transform_file(const Sim3Transform& t, const std::string& path);

/// Shortest decimal representation that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace sim3align::io
