#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sim3align/alignment.hpp"
#include "sim3align/error.hpp"
#include "sim3align/io.hpp"
#include "sim3align/scale_series.hpp"
#include "sim3align/synth.hpp"
#include "test_util.hpp"

using namespace sim3align;
using namespace testutil;

namespace {

synth::ScenarioConfig base_config() {
    synth::ScenarioConfig config;
    config.seed = 9;
    config.n_frames = 600;
    config.fps = 60.0;
    config.path_kind = synth::PathKind::lissajous;
    config.path_scale = 3.0;
    config.n_keyframes = 10;
    config.samples_per_keyframe = 60;
    return config;
}

std::string dataset_fingerprint(const synth::SyntheticDataset& data) {
    std::ostringstream out;
    io::write_trajectory(data.ground_truth, out);
    io::write_trajectory(data.slam, out);
    io::KeyFrameFile kfs{data.camera, data.keyframes};
    io::write_keyframes(kfs, out);
    io::write_transform(data.true_transform, out);
    return out.str();
}

}  // namespace

TEST_CASE("identical configs generate bit-identical datasets") {
    synth::ScenarioConfig config = base_config();
    config.noise_sigma_t = 0.01;
    config.noise_sigma_r = 0.002;
    config.transient_len = 100;
    config.transient_drift = 2.0;
    config.true_transform = Sim3Transform(
        4.0, Rotation3::from_axis_angle({1, 2, 3}, 0.7), {5, -1, 2});
    const auto a = synth::generate(config);
    const auto b = synth::generate(config);
    CHECK(dataset_fingerprint(a) == dataset_fingerprint(b));

    synth::ScenarioConfig other = config;
    other.seed = 10;
    CHECK(dataset_fingerprint(synth::generate(other)) != dataset_fingerprint(a));
}

TEST_CASE("identity transform with zero noise reproduces the ground truth exactly") {
    synth::ScenarioConfig config = base_config();
    const auto data = synth::generate(config);
    REQUIRE(data.slam.size() == data.ground_truth.size());
    for (std::size_t k = 0; k < data.slam.size(); ++k) {
        CHECK(data.slam[k].pose.translation() == data.ground_truth[k].pose.translation());
        CHECK(data.slam[k].pose.rotation() == data.ground_truth[k].pose.rotation());
        CHECK(data.slam[k].timestamp == data.ground_truth[k].timestamp);
    }
}

TEST_CASE("align recovers the generator transform to 1e-9") {
    synth::ScenarioConfig config = base_config();
    config.true_transform =
        Sim3Transform(15.485714285714286,
                      Rotation3::from_axis_angle({0.3, -1.0, 0.2}, 1.1), {12, -7, 3});
    const auto data = synth::generate(config);
    const TrajectoryPair pair = associate(data.slam, data.ground_truth, 0.02);
    const AlignmentResult result = align(pair);
    const TransformError err = transform_error(result.transform, config.true_transform);
    CHECK(err.relative_scale < 1e-9);
    CHECK(err.rotation_angle < 1e-9);
    CHECK(err.translation < 1e-8 * std::max(1.0, config.true_transform.translation().norm()));
}

TEST_CASE("reference scenario reproduces the expected scene statistics") {
    synth::ScenarioConfig config = base_config();
    config.n_frames = 7000;
    config.fps = 60.0;
    config.path_length = 195.12;
    config.n_keyframes = 123;
    config.samples_per_keyframe = 30;
    const double ratio = 195.12 / 12.6;
    config.true_transform = Sim3Transform(ratio, Rotation3::from_axis_angle({0, 0, 1}, 0.4),
                                          {1.0, 2.0, 0.0});
    const auto data = synth::generate(config);

    CHECK(data.ground_truth.size() == 7000);
    CHECK(data.keyframes.size() == 123);
    // 7000 frames at 60 Hz span 6999 frame periods.
    const double duration =
        data.ground_truth.back().timestamp - data.ground_truth.front().timestamp;
    CHECK(duration == doctest::Approx(116.65).epsilon(1e-6));

    CHECK(path_length(data.ground_truth) == doctest::Approx(195.12).epsilon(1e-9));
    CHECK(path_length(data.slam) == doctest::Approx(12.6).epsilon(1e-9));
}

TEST_CASE("key-frame samples are in bounds with positive SLAM-unit depths") {
    synth::ScenarioConfig config = base_config();
    config.true_transform = Sim3Transform(8.0, Rotation3::identity(), {});
    const auto data = synth::generate(config);
    REQUIRE(!data.keyframes.empty());
    std::size_t total = 0;
    for (const KeyFrame& kf : data.keyframes) {
        total += kf.samples.size();
        for (const DepthSample& s : kf.samples) {
            CHECK(s.u >= 0);
            CHECK(s.u < config.camera.width);
            CHECK(s.v >= 0);
            CHECK(s.v < config.camera.height);
            CHECK(s.d > 0.0);
        }
    }
    CHECK(total > 0);
}

TEST_CASE("back-projected key-frame clouds lie exactly on scene surfaces") {
    synth::ScenarioConfig config = base_config();
    config.true_transform = Sim3Transform(
        5.0, Rotation3::from_axis_angle({1, 0, 1}, 0.8), {3, 3, 3});
    const auto data = synth::generate(config);

    // SLAM-frame cloud mapped through the true transform is the world cloud.
    const PointCloud slam_cloud = back_project_all(data.keyframes, data.camera);
    const PointCloud world_cloud = transform_cloud(data.true_transform, slam_cloud);
    const auto distances = synth::distance_to_scene(world_cloud, data.scene);
    REQUIRE(!distances.empty());
    for (double d : distances) CHECK(d < 1e-8);
}

TEST_CASE("point-to-box distance: trivial cases") {
    const std::vector<Aabb> unit_box{{{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}}};

    PointCloud cloud;
    cloud.points.push_back({0.5, 0.0, 0.0});   // on a face
    cloud.points.push_back({0.0, 0.0, 1.0});   // 0.5 above the top face
    cloud.points.push_back({0.0, 0.0, 0.0});   // center: 0.5 from every face
    cloud.points.push_back({1.5, 2.5, 0.0});   // outside, nearest corner region
    const auto d = synth::distance_to_scene(cloud, unit_box);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == doctest::Approx(0.5));
    CHECK(d[2] == doctest::Approx(0.5));
    CHECK(d[3] == doctest::Approx(std::sqrt(1.0 + 4.0)));

    CHECK_THROWS_AS(static_cast<void>(synth::distance_to_scene(cloud, {})), Error);
}

TEST_CASE("point-to-box distance matches a 1 mm surface-sampling oracle") {
    const Aabb box{{-0.1, -0.1, -0.1}, {0.1, 0.1, 0.1}};
    const std::vector<Aabb> scene{box};

    // Dense samples on all six faces at 1 mm pitch.
    std::vector<Vec3> surface;
    const double step = 0.001;
    for (double a = -0.1; a <= 0.1 + 1e-12; a += step) {
        for (double b = -0.1; b <= 0.1 + 1e-12; b += step) {
            surface.push_back({a, b, -0.1});
            surface.push_back({a, b, 0.1});
            surface.push_back({a, -0.1, b});
            surface.push_back({a, 0.1, b});
            surface.push_back({-0.1, a, b});
            surface.push_back({0.1, a, b});
        }
    }

    Rng rng(601);
    PointCloud cloud;
    for (int i = 0; i < 100; ++i) cloud.points.push_back(random_vec(rng, 0.3));
    const auto got = synth::distance_to_scene(cloud, scene);

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        double oracle = std::numeric_limits<double>::infinity();
        for (const Vec3& s : surface) oracle = std::min(oracle, distance(cloud.points[i], s));
        CHECK(std::abs(got[i] - oracle) < 2.0 * step);
    }
}

TEST_CASE("full pipeline recovers world-frame cloud positions within 1e-7 m") {
    Rng rng(602);
    for (int trial = 0; trial < 5; ++trial) {
        synth::ScenarioConfig config = base_config();
        config.seed = 700 + static_cast<std::uint64_t>(trial);
        config.true_transform = random_sim3(rng, 0.1, 20.0, 20.0);
        const auto data = synth::generate(config);

        const TrajectoryPair pair = associate(data.slam, data.ground_truth, 0.02);
        ScaleSeries series = compute_factors(pair);
        detect_stable_window(series);
        const AlignmentResult result = align(pair, exclusion_prefix(series));

        const PointCloud slam_cloud = back_project_all(data.keyframes, data.camera);
        const PointCloud recovered = transform_cloud(result.transform, slam_cloud);
        const PointCloud truth = transform_cloud(data.true_transform, slam_cloud);
        REQUIRE(!recovered.empty());
        for (std::size_t i = 0; i < recovered.size(); ++i) {
            CHECK(distance(recovered.points[i], truth.points[i]) < 1e-7);
        }
    }
}

TEST_CASE("noisy aligned clouds stay within twice the noise sigma of the scene") {
    const double sigma = 0.01;  // 1 cm
    synth::ScenarioConfig config = base_config();
    config.seed = 901;
    config.noise_sigma_t = sigma;
    config.n_keyframes = 20;
    config.samples_per_keyframe = 100;
    config.true_transform =
        Sim3Transform(5.0, Rotation3::from_axis_angle({0, 0, 1}, 1.2), {2, -1, 0.5});
    const auto data = synth::generate(config);

    const TrajectoryPair pair = associate(data.slam, data.ground_truth, 0.02);
    const AlignmentResult result = align(pair);

    const PointCloud cloud =
        transform_cloud(result.transform, back_project_all(data.keyframes, data.camera));
    auto distances = synth::distance_to_scene(cloud, data.scene);
    REQUIRE(distances.size() > 500);
    std::sort(distances.begin(), distances.end());
    const double median = distances[distances.size() / 2];
    CHECK(median < 2.0 * sigma);
    CHECK(median > 0.0);  // the noise is real
}

TEST_CASE("transient prefix is detected near its true length") {
    const int transient = 300;
    const std::size_t window = kDefaultWindow;
    int within = 0;
    for (int seed = 0; seed < 20; ++seed) {
        synth::ScenarioConfig config = base_config();
        config.seed = 800 + static_cast<std::uint64_t>(seed);
        config.n_frames = 2000;
        config.n_keyframes = 0;
        config.transient_len = transient;
        config.transient_drift = 2.5;
        config.true_transform =
            Sim3Transform(6.0, Rotation3::from_axis_angle({0, 1, 0}, 0.5), {2, 0, 1});
        const auto data = synth::generate(config);

        const TrajectoryPair pair = associate(data.slam, data.ground_truth, 0.02);
        ScaleSeries series = compute_factors(pair);
        detect_stable_window(series);
        const std::size_t prefix = exclusion_prefix(series);
        if (prefix + window >= static_cast<std::size_t>(transient) &&
            prefix <= static_cast<std::size_t>(transient) + window) {
            ++within;
        }

        // Excluding the transient must strictly improve the fit.
        const AlignmentResult with_exclusion = align(pair, prefix);
        const AlignmentResult without = align(pair, 0);
        CHECK(with_exclusion.rmse_after < without.rmse_after);
    }
    CHECK(within >= 18);  // >= 90% of seeds
}

TEST_CASE("config files round trip") {
    synth::ScenarioConfig config = base_config();
    config.true_transform = Sim3Transform(
        2.5, Rotation3::from_axis_angle({0.1, 0.9, -0.4}, 2.0), {-3, 0.5, 9});
    config.scene_boxes = {{{-1, -1, -1}, {1, 1, 1}}, {{2, 2, 2}, {3, 4, 5}}};
    config.noise_sigma_t = 0.005;
    config.path_length = 42.0;

    std::ostringstream out;
    synth::write_config(config, out);
    std::istringstream in(out.str());
    const synth::ScenarioConfig back = synth::read_config(in);

    CHECK(back.seed == config.seed);
    CHECK(back.n_frames == config.n_frames);
    CHECK(back.fps == config.fps);
    CHECK(back.path_kind == config.path_kind);
    CHECK(back.path_scale == config.path_scale);
    CHECK(back.path_length == config.path_length);
    CHECK(back.true_transform == config.true_transform);
    CHECK(back.noise_sigma_t == config.noise_sigma_t);
    CHECK(back.scene_boxes.size() == 2);
    CHECK(back.scene_boxes[1].max == config.scene_boxes[1].max);

    // Same config text, same dataset.
    CHECK(dataset_fingerprint(synth::generate(back)) ==
          dataset_fingerprint(synth::generate(config)));
}

TEST_CASE("config validation names the offending field") {
    synth::ScenarioConfig config = base_config();
    config.n_frames = 1;
    try {
        static_cast<void>(synth::generate(config));
        FAIL("expected invalid argument");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("n_frames") != std::string::npos);
    }

    std::istringstream bad("rocket_boosters 11\n");
    try {
        static_cast<void>(synth::read_config(bad));
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse);
        CHECK(std::string(e.what()).find("rocket_boosters") != std::string::npos);
    }
}

TEST_CASE("all path kinds produce usable trajectories") {
    for (const auto kind : {synth::PathKind::line, synth::PathKind::circle,
                            synth::PathKind::lissajous, synth::PathKind::waypoint_spline}) {
        synth::ScenarioConfig config = base_config();
        config.path_kind = kind;
        config.n_keyframes = 0;
        const auto data = synth::generate(config);
        CHECK(path_length(data.ground_truth) > 0.0);

        // Timestamps strictly increase at the frame period.
        for (std::size_t k = 1; k < data.ground_truth.size(); ++k) {
            CHECK(data.ground_truth[k].timestamp > data.ground_truth[k - 1].timestamp);
        }
    }
}
