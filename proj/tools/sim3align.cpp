// sim3align: metric alignment of monocular-SLAM trajectories and point
// clouds against a reference (IMU / ground-truth) trajectory.
//
// Subcommands:
//   align         closed-form Sim(3) fit with transient exclusion
//   scale-series  per-frame squared length-ratio CSV
//   cloud         back-project key-frames and transform the cloud
//   octree        voxelize a PLY cloud into an occupancy octree
//   synth         generate a synthetic dataset from a config file

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "sim3align/alignment.hpp"
#include "sim3align/error.hpp"
#include "sim3align/io.hpp"
#include "sim3align/octree.hpp"
#include "sim3align/scale_series.hpp"
#include "sim3align/synth.hpp"
#include "sim3align/trajectory.hpp"

namespace {

using namespace sim3align;

constexpr int kExitUsage = 2;
constexpr int kExitParse = 3;
constexpr int kExitInsufficientData = 4;
constexpr int kExitDegenerate = 5;
constexpr int kExitIo = 6;

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::invalid_argument: return kExitUsage;
        case ErrorCode::parse: return kExitParse;
        case ErrorCode::insufficient_data: return kExitInsufficientData;
        case ErrorCode::degenerate: return kExitDegenerate;
        case ErrorCode::io: return kExitIo;
    }
    return 1;
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double ms_between(Clock::time_point from, Clock::time_point to) {
    return std::chrono::duration<double, std::milli>(to - from).count();
}

/// Line-oriented key=value report; the machine-readable half of every run.
class Report {
public:
    void add(const std::string& key, const std::string& value) {
        lines_.push_back(key + "=" + value);
    }
    void add(const std::string& key, double value) { add(key, io::format_double(value)); }
    void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }
    void add(const std::string& key, int value) { add(key, std::to_string(value)); }

    void write(std::ostream& out) const {
        for (const auto& line : lines_) out << line << '\n';
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
        write(out);
        if (!out) throw Error(ErrorCode::io, "write to '" + path + "' failed");
    }

private:
    std::vector<std::string> lines_;
};

void add_transform(Report& report, const std::string& prefix, const Sim3Transform& t) {
    const UnitQuaternion& q = t.rotation().quaternion();
    report.add(prefix + ".scale", t.scale());
    report.add(prefix + ".rotation.qw", q.w());
    report.add(prefix + ".rotation.qx", q.x());
    report.add(prefix + ".rotation.qy", q.y());
    report.add(prefix + ".rotation.qz", q.z());
    report.add(prefix + ".translation.x", t.translation().x);
    report.add(prefix + ".translation.y", t.translation().y);
    report.add(prefix + ".translation.z", t.translation().z);
}

struct SeriesParams {
    double max_dt = 0.02;
    std::size_t window = kDefaultWindow;
    double rel_tol = kDefaultRelTol;
    double min_step = kDefaultMinStep;
};

void add_series_flags(CLI::App* cmd, SeriesParams& p) {
    cmd->add_option("--max-dt", p.max_dt, "Association timestamp tolerance [s]")
        ->capture_default_str();
    cmd->add_option("--window", p.window, "Stability detection window [frames]")
        ->capture_default_str();
    cmd->add_option("--rel-tol", p.rel_tol, "Median-relative spread bound for a stable window")
        ->capture_default_str();
    cmd->add_option("--min-step", p.min_step,
                    "Skip ratio frames with displacements shorter than this")
        ->capture_default_str();
}

void add_series_params(Report& report, const SeriesParams& p) {
    report.add("param.max_dt", p.max_dt);
    report.add("param.window", p.window);
    report.add("param.rel_tol", p.rel_tol);
    report.add("param.min_step", p.min_step);
}

void add_series_summary(Report& report, const ScaleSeries& series) {
    report.add("series.n_factors", series.factors.size());
    report.add("series.n_skipped", series.skipped.size());
    report.add("series.stable_start",
               series.stable_start ? std::to_string(*series.stable_start)
                                   : std::string("none"));
    report.add("series.warning_no_stable_window", series.no_stable_window ? 1 : 0);
    report.add("series.n_transient", series.count(Stage::transient));
    report.add("series.n_converging", series.count(Stage::converging));
    report.add("series.n_stable", series.count(Stage::stable));
}

// ------------------------------------ align ---------------------------------

int cmd_align(const std::string& slam_path, const std::string& ref_path,
              const SeriesParams& params, bool no_prefix_exclusion, bool fix_scale,
              const std::string& out_trajectory, const std::string& out_transform,
              const std::string& report_path) {
    const auto t_start = Clock::now();
    Report report;
    report.add("command", "align");
    report.add("input.slam", slam_path);
    report.add("input.reference", ref_path);
    add_series_params(report, params);
    report.add("param.prefix_exclusion", no_prefix_exclusion ? 0 : 1);
    report.add("param.fix_scale", fix_scale ? 1 : 0);

    const io::TrajectoryFile slam = io::read_trajectory_file(slam_path);
    const io::TrajectoryFile ref = io::read_trajectory_file(ref_path);

    const auto t_assoc = Clock::now();
    const TrajectoryPair pair = associate(slam.poses, ref.poses, params.max_dt);

    const auto t_series = Clock::now();
    ScaleSeries series = compute_factors(pair, params.min_step);
    std::size_t prefix = 0;
    if (!no_prefix_exclusion && series.factors.size() >= params.window) {
        detect_stable_window(series, params.window, params.rel_tol);
        prefix = exclusion_prefix(series);
    }

    const auto t_align = Clock::now();
    const AlignmentResult result = align(pair, prefix, fix_scale);

    add_transform(report, "result", result.transform);
    report.add("result.rmse_before", result.rmse_before);
    report.add("result.rmse_after", result.rmse_after);
    report.add("result.n_pairs_used", result.n_pairs_used);
    report.add("result.excluded_prefix", result.excluded_prefix);
    report.add("pairs.associated", pair.size());
    add_series_summary(report, series);

    const Trajectory aligned = transform_trajectory(result.transform, slam.poses);
    report.add("path.slam_length", path_length(slam.poses));
    report.add("path.reference_length", path_length(ref.poses));
    report.add("path.aligned_length", path_length(aligned));

    if (!out_trajectory.empty()) {
        io::write_trajectory_file(aligned, out_trajectory,
                                  {"aligned by sim3align from " + slam_path});
        report.add("output.trajectory", out_trajectory);
    }
    if (!out_transform.empty()) {
        io::write_transform_file(result.transform, out_transform);
        report.add("output.transform", out_transform);
    }

    report.add("timing.read_ms", ms_between(t_start, t_assoc));
    report.add("timing.associate_ms", ms_between(t_assoc, t_series));
    report.add("timing.series_ms", ms_between(t_series, t_align));
    report.add("timing.align_ms", ms_since(t_align));
    report.add("timing.total_ms", ms_since(t_start));

    const UnitQuaternion& q = result.transform.rotation().quaternion();
    std::cout << "Alignment summary\n";
    std::cout << "  - Associated pose pairs:  " << pair.size() << '\n';
    std::cout << "  - Excluded prefix:        " << result.excluded_prefix
              << (no_prefix_exclusion ? " (exclusion disabled)" : "") << '\n';
    std::cout << "  - Pairs used:             " << result.n_pairs_used << '\n';
    std::cout << "  - Scale:                  " << io::format_double(result.transform.scale())
              << '\n';
    std::cout << "  - Rotation quaternion:    [" << io::format_double(q.w()) << ", "
              << io::format_double(q.x()) << ", " << io::format_double(q.y()) << ", "
              << io::format_double(q.z()) << "]\n";
    std::cout << "  - Translation:            [" << io::format_double(result.transform.translation().x)
              << ", " << io::format_double(result.transform.translation().y) << ", "
              << io::format_double(result.transform.translation().z) << "]\n";
    std::cout << "  - RMSE before/after:      " << io::format_double(result.rmse_before) << " / "
              << io::format_double(result.rmse_after) << '\n';
    std::cout << "  - SLAM path length:       " << io::format_double(path_length(slam.poses))
              << " (source units)\n";
    std::cout << "  - Reference path length:  " << io::format_double(path_length(ref.poses))
              << '\n';
    std::cout << "  - Aligned path length:    " << io::format_double(path_length(aligned))
              << '\n';

    if (!report_path.empty()) {
        report.save(report_path);
    } else {
        std::cout << "---\n";
        report.write(std::cout);
    }
    return 0;
}

// --------------------------------- scale-series -----------------------------

int cmd_scale_series(const std::string& slam_path, const std::string& ref_path,
                     const SeriesParams& params, const std::string& out_csv) {
    const io::TrajectoryFile slam = io::read_trajectory_file(slam_path);
    const io::TrajectoryFile ref = io::read_trajectory_file(ref_path);
    const TrajectoryPair pair = associate(slam.poses, ref.poses, params.max_dt);

    ScaleSeries series = compute_factors(pair, params.min_step);
    if (series.factors.size() >= params.window) {
        detect_stable_window(series, params.window, params.rel_tol);
    }

    if (out_csv.empty()) {
        write_scale_series_csv(series, std::cout);
    } else {
        std::ofstream out(out_csv);
        if (!out) throw Error(ErrorCode::io, "cannot open '" + out_csv + "' for writing");
        write_scale_series_csv(series, out);
        if (!out) throw Error(ErrorCode::io, "write to '" + out_csv + "' failed");
    }
    return 0;
}

// ------------------------------------ cloud ---------------------------------

int cmd_cloud(const std::string& keyframe_path, const std::string& transform_path,
              const std::vector<double>& inline_transform, const std::string& out_ply,
              bool binary) {
    const io::KeyFrameFile kfs = io::read_keyframes_file(keyframe_path);

    Sim3Transform transform;
    if (!transform_path.empty()) {
        transform = io::read_transform_file(transform_path);
    } else if (!inline_transform.empty()) {
        const auto& v = inline_transform;
        const double norm = std::sqrt(v[1] * v[1] + v[2] * v[2] + v[3] * v[3] + v[4] * v[4]);
        if (!(norm > 0.0)) {
            throw Error(ErrorCode::invalid_argument, "--set quaternion must be nonzero");
        }
        transform = Sim3Transform(
            v[0], Rotation3(UnitQuaternion::from_unnormalized(v[4], v[1], v[2], v[3])),
            {v[5], v[6], v[7]});
    }

    const PointCloud cloud = transform_cloud(transform, back_project_all(kfs.frames, kfs.intrinsics));
    io::write_ply_file(cloud, out_ply, binary);

    std::cout << "key-frames:  " << kfs.frames.size() << '\n';
    std::cout << "points:      " << cloud.size() << '\n';
    std::cout << "output:      " << out_ply << '\n';
    return 0;
}

// ----------------------------------- octree ---------------------------------

int cmd_octree(const std::string& ply_path, double resolution, const std::string& out_tree,
               const std::string& out_centers_ply, const std::string& report_path) {
    const PointCloud cloud = io::read_ply_file(ply_path);
    const OccupancyOctree tree = build_octree(cloud, resolution);
    const OccupancyOctree::Stats stats = tree.stats();

    Report report;
    report.add("command", "octree");
    report.add("input.cloud", ply_path);
    report.add("param.resolution", resolution);
    report.add("octree.leaf_count", stats.leaf_count);
    report.add("octree.node_count", stats.node_count);
    report.add("octree.depth", stats.depth);
    report.add("octree.memory_estimate_bytes", stats.memory_estimate_bytes);
    report.add("octree.points", static_cast<std::size_t>(tree.total_points()));
    report.add("octree.root_size", tree.root_size());

    if (!out_tree.empty()) {
        std::ofstream out(out_tree, std::ios::binary);
        if (!out) throw Error(ErrorCode::io, "cannot open '" + out_tree + "' for writing");
        write_octree(tree, out);
        if (!out) throw Error(ErrorCode::io, "write to '" + out_tree + "' failed");
        report.add("output.octree", out_tree);
    }
    if (!out_centers_ply.empty()) {
        io::write_ply_file(tree.leaf_centers_cloud(), out_centers_ply, false);
        report.add("output.centers", out_centers_ply);
    }

    report.write(std::cout);
    if (!report_path.empty()) report.save(report_path);
    return 0;
}

// ------------------------------------ synth ---------------------------------

int cmd_synth(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override) {
    synth::ScenarioConfig config = synth::read_config_file(config_path);
    if (seed_override) config.seed = *seed_override;
    const synth::SyntheticDataset data = synth::generate(config);

    const std::string prefix = out_dir.empty() ? "" : out_dir + "/";
    io::write_trajectory_file(data.ground_truth, prefix + "ground_truth.txt",
                              {"synthetic ground truth (world frame, meters)"});
    io::write_trajectory_file(data.slam, prefix + "slam.txt",
                              {"synthetic SLAM estimate (SLAM frame, arbitrary units)"});
    io::KeyFrameFile kfs;
    kfs.intrinsics = data.camera;
    kfs.frames = data.keyframes;
    io::write_keyframes_file(kfs, prefix + "keyframes.txt");
    io::write_transform_file(data.true_transform, prefix + "true_transform.txt");
    synth::write_config_file(config, prefix + "config_echo.txt");

    std::cout << "frames:      " << data.ground_truth.size() << '\n';
    std::cout << "key-frames:  " << data.keyframes.size() << '\n';
    std::cout << "gt length:   " << io::format_double(path_length(data.ground_truth)) << " m\n";
    std::cout << "slam length: " << io::format_double(path_length(data.slam)) << " units\n";
    std::cout << "outputs:     " << prefix << "{ground_truth,slam,keyframes,true_transform}"
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Metric alignment of monocular SLAM output via closed-form Sim(3)"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    // align
    std::string slam_path, ref_path, out_trajectory, out_transform, report_path;
    SeriesParams params;
    bool no_prefix_exclusion = false;
    bool fix_scale = false;
    auto* align_cmd = app.add_subcommand("align", "Fit Lambda* and align a SLAM trajectory");
    align_cmd->add_option("slam", slam_path, "SLAM trajectory file")->required();
    align_cmd->add_option("reference", ref_path, "Reference trajectory file")->required();
    add_series_flags(align_cmd, params);
    align_cmd->add_flag("--no-prefix-exclusion", no_prefix_exclusion,
                        "Fit on all pairs, skipping transient detection");
    align_cmd->add_flag("--fix-scale-1", fix_scale, "Rigid SE(3) fit with scale pinned to 1");
    align_cmd->add_option("--out-trajectory", out_trajectory, "Write the aligned trajectory");
    align_cmd->add_option("--out-transform", out_transform, "Write the fitted transform");
    align_cmd->add_option("--report", report_path, "Write the key=value report here");

    // scale-series
    std::string csv_path;
    auto* series_cmd =
        app.add_subcommand("scale-series", "Per-frame squared length-ratio CSV");
    series_cmd->add_option("slam", slam_path, "SLAM trajectory file")->required();
    series_cmd->add_option("reference", ref_path, "Reference trajectory file")->required();
    add_series_flags(series_cmd, params);
    series_cmd->add_option("--out", csv_path, "CSV output path (default: stdout)");

    // cloud
    std::string keyframe_path, transform_path, ply_path;
    std::vector<double> inline_transform;
    bool binary_ply = false;
    auto* cloud_cmd = app.add_subcommand("cloud", "Back-project key-frames to a PLY cloud");
    cloud_cmd->add_option("keyframes", keyframe_path, "Key-frame file")->required();
    cloud_cmd->add_option("--transform", transform_path, "Transform file to apply");
    cloud_cmd
        ->add_option("--set", inline_transform,
                     "Inline transform: s qx qy qz qw tx ty tz")
        ->expected(8);
    cloud_cmd->add_option("--out", ply_path, "Output PLY path")->required();
    cloud_cmd->add_flag("--binary", binary_ply, "Binary little-endian PLY");

    // octree
    std::string tree_path, centers_path;
    double resolution = 0.1;
    auto* octree_cmd = app.add_subcommand("octree", "Voxelize a PLY cloud");
    octree_cmd->add_option("cloud", ply_path, "Input PLY cloud")->required();
    octree_cmd->add_option("--resolution", resolution, "Leaf edge length [m]")
        ->required();
    octree_cmd->add_option("--out", tree_path, "Output octree (OCT1 binary)");
    octree_cmd->add_option("--ply-centers", centers_path, "Occupied leaf centers as PLY");
    octree_cmd->add_option("--report", report_path, "Write the key=value report here");

    // synth
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed_override;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth_cmd->add_option("config", config_path, "Scenario config file")->required();
    synth_cmd->add_option("--out-dir", out_dir, "Output directory (default: cwd)");
    synth_cmd->add_option("--seed", seed_override, "Override the config seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (app.got_subcommand(align_cmd)) {
            return cmd_align(slam_path, ref_path, params, no_prefix_exclusion, fix_scale,
                             out_trajectory, out_transform, report_path);
        }
        if (app.got_subcommand(series_cmd)) {
            return cmd_scale_series(slam_path, ref_path, params, csv_path);
        }
        if (app.got_subcommand(cloud_cmd)) {
            if (!transform_path.empty() && !inline_transform.empty()) {
                throw Error(ErrorCode::invalid_argument,
                            "--transform and --set are mutually exclusive");
            }
            return cmd_cloud(keyframe_path, transform_path, inline_transform, ply_path,
                             binary_ply);
        }
        if (app.got_subcommand(octree_cmd)) {
            return cmd_octree(ply_path, resolution, tree_path, centers_path, report_path);
        }
        if (app.got_subcommand(synth_cmd)) {
            return cmd_synth(config_path, out_dir, seed_override);
        }
    } catch (const Error& e) {
        std::cerr << "sim3align: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "sim3align: " << e.what() << '\n';
        return 1;
    }
    return kExitUsage;
}
