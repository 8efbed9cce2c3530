#include "sim3align/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "sim3align/error.hpp"
#include "sim3align/io.hpp"
#include "sim3align/rng.hpp"

namespace sim3align::synth {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kNearClip = 0.05;   // meters, in front of the camera
constexpr double kPathHeight = 2.5;  // meters above the scene plane

Vec3 scene_center(const std::vector<Aabb>& boxes) {
    if (boxes.empty()) return {0.0, 0.0, 0.0};
    Vec3 c;
    for (const Aabb& b : boxes) c += (b.min + b.max) * 0.5;
    return c / static_cast<double>(boxes.size());
}

/// Camera-to-world rotation looking from `eye` toward `target`, +z forward.
Rotation3 look_at(const Vec3& eye, const Vec3& target) {
    Vec3 forward = (target - eye);
    if (forward.norm() < 1e-12) forward = {0.0, 0.0, -1.0};
    forward = forward.normalized();
    Vec3 right = Vec3{0.0, 0.0, 1.0}.cross(forward);
    if (right.norm() < 1e-9) right = Vec3{1.0, 0.0, 0.0};
    right = right.normalized();
    const Vec3 down = forward.cross(right);
    Mat3 m;
    m(0, 0) = right.x;   m(0, 1) = down.x;   m(0, 2) = forward.x;
    m(1, 0) = right.y;   m(1, 1) = down.y;   m(1, 2) = forward.y;
    m(2, 0) = right.z;   m(2, 1) = down.z;   m(2, 2) = forward.z;
    return Rotation3::from_matrix(m);
}

Vec3 catmull_rom(const std::vector<Vec3>& pts, double u) {
    const std::size_t segs = pts.size() - 3;
    const double s = std::min(u, std::nextafter(1.0, 0.0)) * static_cast<double>(segs);
    const auto seg = static_cast<std::size_t>(s);
    const double t = s - static_cast<double>(seg);
    const Vec3& p0 = pts[seg];
    const Vec3& p1 = pts[seg + 1];
    const Vec3& p2 = pts[seg + 2];
    const Vec3& p3 = pts[seg + 3];
    const double t2 = t * t, t3 = t2 * t;
    return (p1 * 2.0 + (p2 - p0) * t + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * t2 +
            (p1 * 3.0 - p0 - p2 * 3.0 + p3) * t3) *
           0.5;
}

std::vector<Vec3> spline_waypoints(double amplitude, Rng& rng) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 8; ++i) {
        pts.push_back({rng.uniform(-amplitude, amplitude), rng.uniform(-amplitude, amplitude),
                       kPathHeight + rng.uniform(-0.3 * amplitude, 0.3 * amplitude)});
    }
    // Duplicate ends so Catmull-Rom interpolates the full range.
    pts.insert(pts.begin(), pts.front());
    pts.push_back(pts.back());
    return pts;
}

Vec3 path_position(PathKind kind, double u, double amplitude,
                   const std::vector<Vec3>& waypoints) {
    const double theta = 2.0 * kPi * u;
    switch (kind) {
        case PathKind::line:
            return {amplitude * (2.0 * u - 1.0), 0.0, kPathHeight};
        case PathKind::circle:
            return {amplitude * std::cos(theta), amplitude * std::sin(theta), kPathHeight};
        case PathKind::lissajous:
            return {amplitude * std::sin(2.0 * theta),
                    0.6 * amplitude * std::sin(3.0 * theta + kPi / 4.0),
                    kPathHeight + 0.3 * amplitude * std::sin(theta)};
        case PathKind::waypoint_spline:
            return catmull_rom(waypoints, u);
    }
    return {};
}

/// Nearest box hit along origin + t * dir for t > kNearClip; returns the
/// ray parameter or a negative value on miss.
double raycast(const Vec3& origin, const Vec3& dir, const std::vector<Aabb>& boxes) {
    double best = -1.0;
    for (const Aabb& box : boxes) {
        double tmin = -std::numeric_limits<double>::infinity();
        double tmax = std::numeric_limits<double>::infinity();
        bool miss = false;
        for (int a = 0; a < 3 && !miss; ++a) {
            const double o = a == 0 ? origin.x : a == 1 ? origin.y : origin.z;
            const double d = a == 0 ? dir.x : a == 1 ? dir.y : dir.z;
            const double lo = a == 0 ? box.min.x : a == 1 ? box.min.y : box.min.z;
            const double hi = a == 0 ? box.max.x : a == 1 ? box.max.y : box.max.z;
            if (std::abs(d) < 1e-15) {
                if (o < lo || o > hi) miss = true;
                continue;
            }
            double t0 = (lo - o) / d;
            double t1 = (hi - o) / d;
            if (t0 > t1) std::swap(t0, t1);
            tmin = std::max(tmin, t0);
            tmax = std::min(tmax, t1);
            if (tmin > tmax) miss = true;
        }
        if (miss || tmin <= kNearClip) continue;
        if (best < 0.0 || tmin < best) best = tmin;
    }
    return best;
}

}  // namespace

const char* to_string(PathKind kind) {
    switch (kind) {
        case PathKind::line: return "line";
        case PathKind::circle: return "circle";
        case PathKind::lissajous: return "lissajous";
        case PathKind::waypoint_spline: return "waypoint-spline";
    }
    return "?";
}

PathKind path_kind_from_string(const std::string& name) {
    if (name == "line") return PathKind::line;
    if (name == "circle") return PathKind::circle;
    if (name == "lissajous") return PathKind::lissajous;
    if (name == "waypoint-spline") return PathKind::waypoint_spline;
    throw Error(ErrorCode::parse, "unknown path kind '" + name + "'");
}

std::vector<Aabb> default_scene() {
    std::vector<Aabb> boxes;
    boxes.push_back({{-5.0, -2.5, -0.1}, {5.0, 2.5, 0.0}});  // ground slab
    const double xs[] = {-4.0, -2.5, -1.0, 0.5, 2.0, 3.5, -3.0, 2.5};
    const double ys[] = {-1.5, 1.0, -0.5, 1.5, -1.5, 0.5, 1.5, -1.0};
    for (int i = 0; i < 8; ++i) {
        boxes.push_back({{xs[i] - 0.5, ys[i] - 0.5, 0.0}, {xs[i] + 0.5, ys[i] + 0.5, 1.0}});
    }
    return boxes;
}

void ScenarioConfig::validate() const {
    if (n_frames < 2) {
        throw Error(ErrorCode::invalid_argument, "n_frames must be at least 2");
    }
    if (!(fps > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "fps must be positive");
    }
    if (!(path_scale > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "path_scale must be positive");
    }
    if (path_length < 0.0) {
        throw Error(ErrorCode::invalid_argument, "path_length must be non-negative");
    }
    camera.validate();
    if (transient_len < 0 || transient_len > n_frames) {
        throw Error(ErrorCode::invalid_argument, "transient_len must be in [0, n_frames]");
    }
    if (!(transient_drift > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "transient_drift must be positive");
    }
    if (noise_sigma_t < 0.0 || noise_sigma_r < 0.0) {
        throw Error(ErrorCode::invalid_argument, "noise sigmas must be non-negative");
    }
    if (n_keyframes < 0 || n_keyframes > n_frames) {
        throw Error(ErrorCode::invalid_argument, "n_keyframes must be in [0, n_frames]");
    }
    if (samples_per_keyframe < 0) {
        throw Error(ErrorCode::invalid_argument, "samples_per_keyframe must be non-negative");
    }
    for (const Aabb& b : scene_boxes) {
        if (!b.min.is_finite() || !b.max.is_finite() || !(b.min.x < b.max.x) ||
            !(b.min.y < b.max.y) || !(b.min.z < b.max.z)) {
            throw Error(ErrorCode::invalid_argument, "scene box must have min < max per axis");
        }
    }
}

SyntheticDataset generate(const ScenarioConfig& config) {
    config.validate();

    SyntheticDataset data;
    data.camera = config.camera;
    data.true_transform = config.true_transform;
    data.scene = config.scene_boxes.empty() ? default_scene() : config.scene_boxes;

    Rng rng(config.seed);
    const int n = config.n_frames;

    // Draw order is fixed: spline waypoints, then per-frame noise, then the
    // transient jitter, then key-frame pixels.
    std::vector<Vec3> waypoints;
    if (config.path_kind == PathKind::waypoint_spline) {
        waypoints = spline_waypoints(config.path_scale, rng);
    }

    // Ground-truth positions.
    std::vector<Vec3> positions(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(n - 1);
        positions[static_cast<std::size_t>(k)] =
            path_position(config.path_kind, u, config.path_scale, waypoints);
    }

    if (config.path_length > 0.0) {
        // Rescale about the path centroid to hit the requested length.
        double length = 0.0;
        Vec3 centroid;
        for (const Vec3& p : positions) centroid += p;
        centroid = centroid / static_cast<double>(n);
        for (std::size_t k = 1; k < positions.size(); ++k) {
            length += distance(positions[k], positions[k - 1]);
        }
        if (!(length > 0.0)) {
            throw Error(ErrorCode::invalid_argument, "path has zero length; cannot rescale");
        }
        const double factor = config.path_length / length;
        for (Vec3& p : positions) p = centroid + (p - centroid) * factor;
    }

    const Vec3 target = scene_center(data.scene);
    data.ground_truth.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double ts = static_cast<double>(k) / config.fps;
        const Vec3& pos = positions[static_cast<std::size_t>(k)];
        data.ground_truth.push_back({ts, Sim3Transform(1.0, look_at(pos, target), pos)});
    }

    // SLAM trajectory: Lambda^-1 * (noise * gt), SE(3) poses.
    const Sim3Transform lambda_inv = config.true_transform.inverse();
    data.slam.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const TimedPose& gt = data.ground_truth[static_cast<std::size_t>(k)];
        Vec3 pos = gt.pose.translation();
        Rotation3 rot = gt.pose.rotation();
        if (config.noise_sigma_t > 0.0) {
            pos += Vec3{rng.normal(config.noise_sigma_t), rng.normal(config.noise_sigma_t),
                        rng.normal(config.noise_sigma_t)};
        }
        if (config.noise_sigma_r > 0.0) {
            const Vec3 w{rng.normal(config.noise_sigma_r), rng.normal(config.noise_sigma_r),
                         rng.normal(config.noise_sigma_r)};
            const double angle = w.norm();
            if (angle > 0.0) {
                rot = Rotation3::from_axis_angle(w / angle, angle) * rot;
            }
        }
        const Sim3Transform noisy(1.0, rot, pos);
        const Sim3Transform slam_sim3 = lambda_inv * noisy;
        data.slam.push_back(
            {gt.timestamp,
             Sim3Transform(1.0, slam_sim3.rotation(), slam_sim3.translation())});
    }

    // Initialization transient: scale the SLAM positions by a factor that
    // decays from the drift to 1, with log-normal per-frame jitter standing
    // in for unsettled depth hypotheses. The jitter is what makes the
    // prefix detectably unstable.
    if (config.transient_len > 0 && config.transient_drift != 1.0) {
        const double log_drift = std::log(config.transient_drift);
        const double jitter_sigma = 0.5 * std::abs(log_drift);
        const int len = config.transient_len;
        for (int k = 0; k < len; ++k) {
            const double progress = static_cast<double>(k) / static_cast<double>(len);
            const double factor =
                std::exp(log_drift * (1.0 - progress) + rng.normal(jitter_sigma));
            auto& pose = data.slam[static_cast<std::size_t>(k)].pose;
            pose = Sim3Transform(1.0, pose.rotation(), pose.translation() * factor);
        }
    }

    // Key-frames: rays through random integer pixels of the clean pose,
    // nearest box hit. Depths are stored in SLAM units.
    if (config.n_keyframes > 0) {
        const double inv_scale = 1.0 / config.true_transform.scale();
        for (int i = 0; i < config.n_keyframes; ++i) {
            const int frame =
                config.n_keyframes == 1
                    ? 0
                    : static_cast<int>(std::llround(static_cast<double>(i) *
                                                    static_cast<double>(n - 1) /
                                                    static_cast<double>(config.n_keyframes - 1)));
            const TimedPose& gt = data.ground_truth[static_cast<std::size_t>(frame)];
            const TimedPose& slam = data.slam[static_cast<std::size_t>(frame)];
            KeyFrame kf;
            kf.id = i;
            kf.timestamp = slam.timestamp;
            kf.pose = slam.pose;
            const int max_attempts = 4 * config.samples_per_keyframe;
            for (int attempt = 0; attempt < max_attempts &&
                                  static_cast<int>(kf.samples.size()) <
                                      config.samples_per_keyframe;
                 ++attempt) {
                const int u = static_cast<int>(rng.uniform_int(
                    static_cast<std::uint64_t>(config.camera.width)));
                const int v = static_cast<int>(rng.uniform_int(
                    static_cast<std::uint64_t>(config.camera.height)));
                const Vec3 dir_cam{(u - config.camera.cx) / config.camera.fx,
                                   (v - config.camera.cy) / config.camera.fy, 1.0};
                const Vec3 dir_world = gt.pose.rotation().apply(dir_cam);
                const double depth = raycast(gt.pose.translation(), dir_world, data.scene);
                if (depth <= 0.0) continue;
                kf.samples.push_back({u, v, depth * inv_scale});
            }
            data.keyframes.push_back(std::move(kf));
        }
    }
    return data;
}

std::vector<double> distance_to_scene(const PointCloud& cloud,
                                      const std::vector<Aabb>& scene) {
    if (scene.empty()) {
        throw Error(ErrorCode::invalid_argument, "scene has no boxes");
    }
    std::vector<double> distances;
    distances.reserve(cloud.size());
    for (const Vec3& p : cloud.points) {
        double best = std::numeric_limits<double>::infinity();
        for (const Aabb& box : scene) {
            double d;
            if (box.contains(p)) {
                // Inside: distance to the nearest face.
                d = std::min({p.x - box.min.x, box.max.x - p.x, p.y - box.min.y,
                              box.max.y - p.y, p.z - box.min.z, box.max.z - p.z});
            } else {
                const Vec3 clamped{std::clamp(p.x, box.min.x, box.max.x),
                                   std::clamp(p.y, box.min.y, box.max.y),
                                   std::clamp(p.z, box.min.z, box.max.z)};
                d = distance(p, clamped);
            }
            best = std::min(best, d);
        }
        distances.push_back(best);
    }
    return distances;
}

namespace {

[[noreturn]] void config_fail(std::size_t line_no, const std::string& what) {
    throw Error(ErrorCode::parse, "config line " + std::to_string(line_no) + ": " + what);
}

double config_double(const std::vector<std::string>& tokens, std::size_t index,
                     std::size_t line_no) {
    const std::string& token = tokens[index];
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        config_fail(line_no, "expected a number, got '" + token + "'");
    }
    return value;
}

long config_long(const std::vector<std::string>& tokens, std::size_t index,
                 std::size_t line_no) {
    const std::string& token = tokens[index];
    long value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        config_fail(line_no, "expected an integer, got '" + token + "'");
    }
    return value;
}

}  // namespace

ScenarioConfig read_config(std::istream& in) {
    ScenarioConfig config;
    double lambda_scale = 1.0;
    double qx = 0, qy = 0, qz = 0, qw = 1;
    Vec3 lambda_t;
    bool have_lambda = false;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::vector<std::string> tokens;
        for (std::string t; ss >> t;) tokens.push_back(t);
        if (tokens.empty()) continue;
        const std::string& key = tokens[0];
        const std::size_t nargs = tokens.size() - 1;
        const auto need = [&](std::size_t n) {
            if (nargs != n) {
                config_fail(line_no, "key '" + key + "' takes " + std::to_string(n) +
                                         " value(s), got " + std::to_string(nargs));
            }
        };
        if (key == "seed") {
            need(1);
            const long v = config_long(tokens, 1, line_no);
            if (v < 0) config_fail(line_no, "seed must be non-negative");
            config.seed = static_cast<std::uint64_t>(v);
        } else if (key == "n_frames") {
            need(1);
            config.n_frames = static_cast<int>(config_long(tokens, 1, line_no));
        } else if (key == "fps") {
            need(1);
            config.fps = config_double(tokens, 1, line_no);
        } else if (key == "path_kind") {
            need(1);
            config.path_kind = path_kind_from_string(tokens[1]);
        } else if (key == "path_scale") {
            need(1);
            config.path_scale = config_double(tokens, 1, line_no);
        } else if (key == "path_length") {
            need(1);
            config.path_length = config_double(tokens, 1, line_no);
        } else if (key == "camera") {
            need(6);
            config.camera.fx = config_double(tokens, 1, line_no);
            config.camera.fy = config_double(tokens, 2, line_no);
            config.camera.cx = config_double(tokens, 3, line_no);
            config.camera.cy = config_double(tokens, 4, line_no);
            config.camera.width = static_cast<int>(config_long(tokens, 5, line_no));
            config.camera.height = static_cast<int>(config_long(tokens, 6, line_no));
        } else if (key == "lambda_scale") {
            need(1);
            lambda_scale = config_double(tokens, 1, line_no);
            have_lambda = true;
        } else if (key == "lambda_quaternion") {
            need(4);
            qx = config_double(tokens, 1, line_no);
            qy = config_double(tokens, 2, line_no);
            qz = config_double(tokens, 3, line_no);
            qw = config_double(tokens, 4, line_no);
            have_lambda = true;
        } else if (key == "lambda_translation") {
            need(3);
            lambda_t = {config_double(tokens, 1, line_no), config_double(tokens, 2, line_no),
                        config_double(tokens, 3, line_no)};
            have_lambda = true;
        } else if (key == "transient_len") {
            need(1);
            config.transient_len = static_cast<int>(config_long(tokens, 1, line_no));
        } else if (key == "transient_drift") {
            need(1);
            config.transient_drift = config_double(tokens, 1, line_no);
        } else if (key == "noise_sigma_t") {
            need(1);
            config.noise_sigma_t = config_double(tokens, 1, line_no);
        } else if (key == "noise_sigma_r") {
            need(1);
            config.noise_sigma_r = config_double(tokens, 1, line_no);
        } else if (key == "n_keyframes") {
            need(1);
            config.n_keyframes = static_cast<int>(config_long(tokens, 1, line_no));
        } else if (key == "samples_per_keyframe") {
            need(1);
            config.samples_per_keyframe = static_cast<int>(config_long(tokens, 1, line_no));
        } else if (key == "box") {
            need(6);
            Aabb box;
            box.min = {config_double(tokens, 1, line_no), config_double(tokens, 2, line_no),
                       config_double(tokens, 3, line_no)};
            box.max = {config_double(tokens, 4, line_no), config_double(tokens, 5, line_no),
                       config_double(tokens, 6, line_no)};
            config.scene_boxes.push_back(box);
        } else {
            config_fail(line_no, "unknown key '" + key + "'");
        }
    }

    if (have_lambda) {
        const double norm = std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
        if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-3) {
            throw Error(ErrorCode::parse, "lambda_quaternion is not unit norm");
        }
        if (!std::isfinite(lambda_scale) || !(lambda_scale > 0.0)) {
            throw Error(ErrorCode::parse, "lambda_scale must be positive");
        }
        config.true_transform =
            Sim3Transform(lambda_scale,
                          Rotation3(UnitQuaternion::from_unnormalized(qw, qx, qy, qz)),
                          lambda_t);
    }
    try {
        config.validate();
    } catch (const Error& e) {
        // Bad values in a config file are content problems, not API misuse.
        throw Error(ErrorCode::parse, e.what());
    }
    return config;
}

ScenarioConfig read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::io, "cannot open '" + path + "' for reading");
    }
    try {
        return read_config(in);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

void write_config(const ScenarioConfig& config, std::ostream& out) {
    using io::format_double;
    const UnitQuaternion& q = config.true_transform.rotation().quaternion();
    out << io::kFormatHeader << '\n';
    out << "seed " << config.seed << '\n';
    out << "n_frames " << config.n_frames << '\n';
    out << "fps " << format_double(config.fps) << '\n';
    out << "path_kind " << to_string(config.path_kind) << '\n';
    out << "path_scale " << format_double(config.path_scale) << '\n';
    out << "path_length " << format_double(config.path_length) << '\n';
    out << "camera " << format_double(config.camera.fx) << ' ' << format_double(config.camera.fy)
        << ' ' << format_double(config.camera.cx) << ' ' << format_double(config.camera.cy)
        << ' ' << config.camera.width << ' ' << config.camera.height << '\n';
    out << "lambda_scale " << format_double(config.true_transform.scale()) << '\n';
    out << "lambda_quaternion " << format_double(q.x()) << ' ' << format_double(q.y()) << ' '
        << format_double(q.z()) << ' ' << format_double(q.w()) << '\n';
    out << "lambda_translation " << format_double(config.true_transform.translation().x) << ' '
        << format_double(config.true_transform.translation().y) << ' '
        << format_double(config.true_transform.translation().z) << '\n';
    out << "transient_len " << config.transient_len << '\n';
    out << "transient_drift " << format_double(config.transient_drift) << '\n';
    out << "noise_sigma_t " << format_double(config.noise_sigma_t) << '\n';
    out << "noise_sigma_r " << format_double(config.noise_sigma_r) << '\n';
    out << "n_keyframes " << config.n_keyframes << '\n';
    out << "samples_per_keyframe " << config.samples_per_keyframe << '\n';
    for (const Aabb& b : config.scene_boxes) {
        out << "box " << format_double(b.min.x) << ' ' << format_double(b.min.y) << ' '
            << format_double(b.min.z) << ' ' << format_double(b.max.x) << ' '
            << format_double(b.max.y) << ' ' << format_double(b.max.z) << '\n';
    }
}

void write_config_file(const ScenarioConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
    }
    write_config(config, out);
    if (!out) {
        throw Error(ErrorCode::io, "write to '" + path + "' failed");
    }
}

}  // namespace sim3align::synth
