#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>

#include "sim3align/error.hpp"
#include "sim3align/projection.hpp"
#include "test_util.hpp"

using namespace sim3align;
using namespace testutil;

namespace {

CameraIntrinsics test_camera() { return {417.0, 417.0, 319.5, 239.5, 640, 480}; }

/// Oracle for back-projection: invert the full 3x3 intrinsic matrix
/// numerically and run the homogeneous pipeline x = T (d * M^-1 [u v 1]),
/// instead of the explicit per-component formula under test.
Vec3 back_project_oracle(const DepthSample& s, const CameraIntrinsics& m,
                         const Sim3Transform& pose) {
    Eigen::Matrix3d intrinsic;
    intrinsic << m.fx, 0.0, m.cx, 0.0, m.fy, m.cy, 0.0, 0.0, 1.0;
    const Eigen::Vector3d pixel(static_cast<double>(s.u), static_cast<double>(s.v), 1.0);
    const Eigen::Vector3d cam = s.d * (intrinsic.inverse() * pixel);
    return apply_homogeneous(homogeneous(pose), from_eigen(cam));
}

}  // namespace

TEST_CASE("principal-point sample lands on the optical axis") {
    KeyFrame kf;
    CameraIntrinsics m{100.0, 100.0, 320.0, 240.0, 640, 480};
    kf.samples.push_back({320, 240, 5.0});
    const PointCloud cloud = back_project(kf, m);
    REQUIRE(cloud.size() == 1);
    CHECK(vec_error(cloud.points[0], {0, 0, 5}) < 1e-15);
}

TEST_CASE("direct substitution example") {
    KeyFrame kf;
    CameraIntrinsics m{100.0, 100.0, 0.0, 0.0, 640, 480};
    kf.samples.push_back({100, 0, 2.0});
    const PointCloud cloud = back_project(kf, m);
    REQUIRE(cloud.size() == 1);
    CHECK(vec_error(cloud.points[0], {2, 0, 2}) < 1e-15);
}

TEST_CASE("identity pose puts every point at depth d exactly") {
    Rng rng(201);
    const CameraIntrinsics m = test_camera();
    KeyFrame kf;
    for (int i = 0; i < 200; ++i) {
        kf.samples.push_back({static_cast<int>(rng.uniform_int(640)),
                              static_cast<int>(rng.uniform_int(480)),
                              rng.uniform(0.1, 50.0)});
    }
    const PointCloud cloud = back_project(kf, m);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK(cloud.points[i].z == kf.samples[i].d);
    }
}

TEST_CASE("back projection matches the full matrix-inverse oracle") {
    Rng rng(202);
    const CameraIntrinsics m = test_camera();
    for (int trial = 0; trial < 50; ++trial) {
        KeyFrame kf;
        kf.id = trial;
        kf.pose = random_sim3(rng, 0.1, 10.0, 10.0);
        for (int i = 0; i < 50; ++i) {
            kf.samples.push_back({static_cast<int>(rng.uniform_int(640)),
                                  static_cast<int>(rng.uniform_int(480)),
                                  rng.uniform(0.1, 100.0)});
        }
        const PointCloud cloud = back_project(kf, m);
        REQUIRE(cloud.size() == kf.samples.size());
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const Vec3 want = back_project_oracle(kf.samples[i], m, kf.pose);
            CHECK(vec_error(cloud.points[i], want) < 1e-9 * std::max(1.0, want.norm()));
            CHECK(cloud.source_ids[i] == kf.id);
        }
    }
}

TEST_CASE("out-of-bounds and bad-depth samples are rejected with context") {
    const CameraIntrinsics m = test_camera();
    KeyFrame kf;
    kf.id = 7;
    kf.samples.push_back({640, 0, 1.0});
    CHECK_THROWS_WITH_AS(static_cast<void>(back_project(kf, m)),
                         doctest::Contains("(640, 0)"), Error);

    kf.samples[0] = {10, 10, 0.0};
    try {
        static_cast<void>(back_project(kf, m));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_argument);
        CHECK(std::string(e.what()).find("sample 0") != std::string::npos);
    }

    kf.samples[0] = {10, -1, 1.0};
    CHECK_THROWS_AS(static_cast<void>(back_project(kf, m)), Error);
}

TEST_CASE("forward projection inverts back projection") {
    const CameraIntrinsics m{100.0, 100.0, 0.0, 0.0, 640, 480};
    const PixelDepth pd = forward_project({2, 0, 2}, m);
    CHECK(pd.u == doctest::Approx(100.0));
    CHECK(pd.v == doctest::Approx(0.0));
    CHECK(pd.d == doctest::Approx(2.0));

    const CameraIntrinsics full = test_camera();
    const PixelDepth principal = forward_project({0, 0, 5}, full);
    CHECK(principal.u == doctest::Approx(full.cx));
    CHECK(principal.v == doctest::Approx(full.cy));
}

TEST_CASE("forward projection rejects points behind the camera") {
    const CameraIntrinsics m = test_camera();
    CHECK_THROWS_AS(forward_project({0, 0, -1}, m), Error);
    CHECK_THROWS_AS(forward_project({0, 0, 0}, m), Error);
}

TEST_CASE("round trip forward then back is the identity to 1e-9") {
    Rng rng(203);
    const CameraIntrinsics m = test_camera();
    for (int trial = 0; trial < 1000; ++trial) {
        const Vec3 p{rng.uniform(-30.0, 30.0), rng.uniform(-30.0, 30.0),
                     rng.uniform(0.1, 100.0)};
        const PixelDepth pd = forward_project(p, m);
        // Real-valued pixel back-projection through the same formula.
        const Vec3 back{(pd.u - m.cx) * pd.d / m.fx, (pd.v - m.cy) * pd.d / m.fy, pd.d};
        CHECK(vec_error(back, p) < 1e-9);
    }
}

TEST_CASE("transform_cloud trivial cases") {
    PointCloud cloud;
    cloud.points = {{1, 2, 3}, {-1, 0, 4}};
    cloud.source_ids = {0, 1};

    const PointCloud same = transform_cloud(Sim3Transform(), cloud);
    CHECK(same.points == cloud.points);
    CHECK(same.source_ids == cloud.source_ids);

    const PointCloud doubled =
        transform_cloud(Sim3Transform(2.0, Rotation3::identity(), {}), cloud);
    CHECK(vec_error(doubled.points[0], {2, 4, 6}) < 1e-15);
    CHECK(vec_error(doubled.points[1], {-2, 0, 8}) < 1e-15);
}

TEST_CASE("transform_cloud scales pairwise distances by exactly s") {
    Rng rng(204);
    for (int trial = 0; trial < 20; ++trial) {
        const Sim3Transform t = random_sim3(rng, 0.1, 10.0, 50.0);
        PointCloud cloud;
        for (int i = 0; i < 60; ++i) cloud.points.push_back(random_vec(rng, 10.0));
        const PointCloud out = transform_cloud(t, cloud);
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            for (std::size_t j = i + 1; j < cloud.size(); ++j) {
                const double d_in = distance(cloud.points[i], cloud.points[j]);
                const double d_out = distance(out.points[i], out.points[j]);
                CHECK(std::abs(d_out / d_in - t.scale()) < 1e-9 * std::max(1.0, t.scale()));
            }
        }
    }
}

TEST_CASE("intrinsics validation") {
    const CameraIntrinsics zero_focal{0.0, 1.0, 0.0, 0.0, 10, 10};
    const CameraIntrinsics cx_outside{1.0, 1.0, 10.0, 0.0, 10, 10};
    const CameraIntrinsics cy_negative{1.0, 1.0, 0.0, -1.0, 10, 10};
    CHECK_THROWS_AS(zero_focal.validate(), Error);
    CHECK_THROWS_AS(cx_outside.validate(), Error);
    CHECK_THROWS_AS(cy_negative.validate(), Error);
    CHECK_NOTHROW(test_camera().validate());
}
