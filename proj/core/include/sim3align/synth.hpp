#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sim3align/projection.hpp"
#include "sim3align/trajectory.hpp"
#include "sim3align/vec3.hpp"

namespace sim3align::synth {

enum class PathKind { line, circle, lissajous, waypoint_spline };

const char* to_string(PathKind kind);
PathKind path_kind_from_string(const std::string& name);

/// Everything that controls a synthetic run. Serialized as a plain-text
/// key-value file (one key per line, '#' comments); see read_config.
struct ScenarioConfig {
    std::uint64_t seed = 1;
    int n_frames = 600;
    double fps = 60.0;                     // Hz
    PathKind path_kind = PathKind::lissajous;
    double path_scale = 3.0;               // path amplitude, meters
    double path_length = 0.0;              // if > 0, rescale to this polyline length (m)
    CameraIntrinsics camera{417.0, 417.0, 319.5, 239.5, 640, 480};
    Sim3Transform true_transform;          // ground-truth Lambda: SLAM frame -> world
    int transient_len = 0;                 // corrupted prefix frames
    double transient_drift = 1.0;          // initial scale multiplier, decays to 1
    double noise_sigma_t = 0.0;            // meters, on translations
    double noise_sigma_r = 0.0;            // radians, small-angle on rotations
    int n_keyframes = 0;                   // key-frames carrying depth samples
    int samples_per_keyframe = 150;
    std::vector<Aabb> scene_boxes;         // meters, world frame

    /// Throws ErrorCode::invalid_argument naming the offending field.
    void validate() const;
};

/// The default scene: a 10 x 5 m ground slab with eight 1 m cubes on it.
std::vector<Aabb> default_scene();

struct SyntheticDataset {
    Trajectory ground_truth;            // world frame, meters
    Trajectory slam;                    // SLAM frame, arbitrary units
    std::vector<KeyFrame> keyframes;    // SLAM-frame poses + depth samples
    CameraIntrinsics camera;
    Sim3Transform true_transform;       // Lambda_gt
    std::vector<Aabb> scene;
};

/// Generate a dataset. Deterministic under the config (including seed).
///
/// The ground-truth path is sampled at fps along path_kind and the camera
/// looks at the scene center. The SLAM trajectory is
/// Lambda^-1 * (noise * ground_truth) with per-frame translation noise
/// sigma_t and small-angle rotation noise sigma_r; for the first
/// transient_len frames the SLAM position is additionally multiplied by a
/// scale factor that decays exponentially from transient_drift to 1 with
/// per-frame log-normal jitter, imitating unsettled depth hypotheses.
/// Key-frame depth samples come from casting rays through integer pixel
/// centers of the clean pose and keeping the nearest scene-box hit, so
/// every sample lies exactly on a box surface.
SyntheticDataset generate(const ScenarioConfig& config);

/// Exact Euclidean distance from each point to the nearest box surface
/// (points inside a box measure to its closest face). Throws
/// ErrorCode::invalid_argument on an empty scene.
std::vector<double> distance_to_scene(const PointCloud& cloud, const std::vector<Aabb>& scene);

/// Parse the key-value config format. Unknown keys are errors (named);
/// missing keys keep their defaults. An empty `box` list selects
/// default_scene().
ScenarioConfig read_config(std::istream& in);
ScenarioConfig read_config_file(const std::string& path);

/// Write every field, including defaulted ones, so a run is reproducible
/// from its echoed config alone.
void write_config(const ScenarioConfig& config, std::ostream& out);
void write_config_file(const ScenarioConfig& config, const std::string& path);

}  // namespace sim3align::synth
