#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <tuple>
#include <vector>

#include "sim3align/error.hpp"
#include "sim3align/octree.hpp"
#include "test_util.hpp"

using namespace sim3align;
using namespace testutil;

namespace {

using Cell = std::tuple<std::int64_t, std::int64_t, std::int64_t>;

Cell cell_of(const Vec3& p, double resolution) {
    return {static_cast<std::int64_t>(std::floor(p.x / resolution)),
            static_cast<std::int64_t>(std::floor(p.y / resolution)),
            static_cast<std::int64_t>(std::floor(p.z / resolution))};
}

/// Brute-force voxel hashing oracle: cell -> point count.
std::map<Cell, std::uint32_t> voxel_hash(const PointCloud& cloud, double resolution) {
    std::map<Cell, std::uint32_t> cells;
    for (const Vec3& p : cloud.points) ++cells[cell_of(p, resolution)];
    return cells;
}

std::map<Cell, std::uint32_t> tree_cells(const OccupancyOctree& tree) {
    std::vector<Vec3> centers;
    std::vector<std::uint32_t> counts;
    tree.occupied_leaves(centers, counts);
    std::map<Cell, std::uint32_t> cells;
    for (std::size_t i = 0; i < centers.size(); ++i) {
        cells[cell_of(centers[i], tree.resolution())] = counts[i];
    }
    return cells;
}

PointCloud random_cloud(Rng& rng, std::size_t n, double extent) {
    PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) cloud.points.push_back(random_vec(rng, extent));
    return cloud;
}

std::string serialize_to_string(const OccupancyOctree& tree) {
    std::ostringstream out;
    write_octree(tree, out);
    return out.str();
}

}  // namespace

TEST_CASE("a single point makes a single occupied leaf") {
    PointCloud cloud;
    cloud.points.push_back({0.2, 0.3, 0.4});
    const OccupancyOctree tree = build_octree(cloud, 0.5);
    const auto stats = tree.stats();
    CHECK(stats.leaf_count == 1);
    CHECK(tree.total_points() == 1);

    std::vector<Vec3> centers;
    std::vector<std::uint32_t> counts;
    tree.occupied_leaves(centers, counts);
    REQUIRE(centers.size() == 1);
    CHECK(counts[0] == 1);
    CHECK(vec_error(centers[0], {0.25, 0.25, 0.25}) < 1e-15);
}

TEST_CASE("8 octant centers occupy exactly 8 leaves") {
    PointCloud cloud;
    for (int i = 0; i < 8; ++i) {
        cloud.points.push_back({i & 1 ? 0.5 : -0.5, i & 2 ? 0.5 : -0.5, i & 4 ? 0.5 : -0.5});
    }
    const OccupancyOctree tree = build_octree(cloud, 1.0);
    CHECK(tree.stats().leaf_count == 8);
    CHECK(tree.total_points() == 8);
    CHECK(tree.max_depth() == 1);
    CHECK(tree.root_size() == 2.0);
}

TEST_CASE("occupied leaves equal brute-force voxel hashing exactly") {
    Rng rng(501);
    for (int trial = 0; trial < 5; ++trial) {
        const PointCloud cloud = random_cloud(rng, 10000, 0.5);
        const double resolution = 0.25;
        const OccupancyOctree tree = build_octree(cloud, resolution);
        const auto want = voxel_hash(cloud, resolution);
        const auto got = tree_cells(tree);
        CHECK(got == want);
        CHECK(tree.total_points() == cloud.size());
    }
}

TEST_CASE("points on shared faces belong to the higher-index cell") {
    PointCloud cloud;
    cloud.points.push_back({0.25, 0.0, 0.0});   // exactly on the x face between cells 0 and 1
    cloud.points.push_back({0.249999, 0.0, 0.0});
    const OccupancyOctree tree = build_octree(cloud, 0.25);
    const auto cells = tree_cells(tree);
    REQUIRE(cells.size() == 2);
    CHECK(cells.count({1, 0, 0}) == 1);
    CHECK(cells.count({0, 0, 0}) == 1);
}

TEST_CASE("query_occupied matches a linear scan") {
    Rng rng(502);
    const PointCloud cloud = random_cloud(rng, 5000, 2.0);
    const OccupancyOctree tree = build_octree(cloud, 0.3);

    std::vector<Vec3> centers;
    std::vector<std::uint32_t> counts;
    tree.occupied_leaves(centers, counts);
    const double edge = tree.leaf_edge();

    for (int trial = 0; trial < 50; ++trial) {
        Vec3 a = random_vec(rng, 2.5);
        Vec3 b = random_vec(rng, 2.5);
        const Aabb box{{std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)},
                       {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)}};

        std::vector<Vec3> want;
        for (const Vec3& c : centers) {
            const Vec3 lo = c - Vec3{0.5 * edge, 0.5 * edge, 0.5 * edge};
            const Vec3 hi = c + Vec3{0.5 * edge, 0.5 * edge, 0.5 * edge};
            if (box.max.x >= lo.x && box.min.x < hi.x && box.max.y >= lo.y &&
                box.min.y < hi.y && box.max.z >= lo.z && box.min.z < hi.z) {
                want.push_back(c);
            }
        }
        std::vector<Vec3> got = tree.query_occupied(box);
        const auto key = [](const Vec3& v) { return std::tuple(v.x, v.y, v.z); };
        std::sort(want.begin(), want.end(),
                  [&](const Vec3& l, const Vec3& r) { return key(l) < key(r); });
        std::sort(got.begin(), got.end(),
                  [&](const Vec3& l, const Vec3& r) { return key(l) < key(r); });
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(vec_error(got[i], want[i]) == 0.0);
        }
    }

    // Whole-root box returns every occupied leaf; disjoint box returns none.
    const Aabb everything{{-10, -10, -10}, {10, 10, 10}};
    CHECK(tree.query_occupied(everything).size() == centers.size());
    const Aabb far_away{{100, 100, 100}, {101, 101, 101}};
    CHECK(tree.query_occupied(far_away).empty());
}

TEST_CASE("stats match an independent recount") {
    Rng rng(503);
    const PointCloud cloud = random_cloud(rng, 3000, 1.0);
    const OccupancyOctree tree = build_octree(cloud, 0.2);
    const auto stats = tree.stats();

    std::vector<Vec3> centers;
    std::vector<std::uint32_t> counts;
    tree.occupied_leaves(centers, counts);
    CHECK(stats.leaf_count == centers.size());
    CHECK(stats.depth == tree.max_depth());
    CHECK(stats.node_count >= stats.leaf_count + 1);  // at least the root on top
    CHECK(stats.memory_estimate_bytes > stats.node_count * sizeof(std::uint32_t));

    std::uint64_t total = 0;
    for (std::uint32_t c : counts) total += c;
    CHECK(total == cloud.size());
}

TEST_CASE("the tree is invariant under permutations of the input") {
    Rng rng(504);
    PointCloud cloud = random_cloud(rng, 2000, 1.5);
    const OccupancyOctree tree = build_octree(cloud, 0.25);
    const std::string bytes = serialize_to_string(tree);

    // Deterministic shuffle.
    for (std::size_t i = cloud.points.size(); i > 1; --i) {
        std::swap(cloud.points[i - 1], cloud.points[rng.uniform_int(i)]);
    }
    const OccupancyOctree shuffled = build_octree(cloud, 0.25);
    CHECK(serialize_to_string(shuffled) == bytes);
}

TEST_CASE("doubling the resolution never increases the leaf count") {
    Rng rng(505);
    for (int trial = 0; trial < 10; ++trial) {
        // Mix of spread-out and tightly clustered clouds.
        PointCloud cloud = random_cloud(rng, 2000, trial % 2 == 0 ? 2.0 : 0.01);
        const Vec3 offset = random_vec(rng, 5.0);
        for (Vec3& p : cloud.points) p += offset;
        double resolution = 0.01;
        std::size_t previous = std::numeric_limits<std::size_t>::max();
        for (int level = 0; level < 8; ++level) {
            const std::size_t leaves = build_octree(cloud, resolution).stats().leaf_count;
            CHECK(leaves <= previous);
            previous = leaves;
            resolution *= 2.0;
        }
    }
}

TEST_CASE("serialization round trips bit-exactly") {
    Rng rng(506);
    const PointCloud cloud = random_cloud(rng, 4000, 3.0);
    const OccupancyOctree tree = build_octree(cloud, 0.4);
    const std::string bytes = serialize_to_string(tree);

    std::istringstream in(bytes);
    const OccupancyOctree back = read_octree(in);
    CHECK(back.root_size() == tree.root_size());
    CHECK(back.max_depth() == tree.max_depth());
    CHECK(vec_error(back.root_origin(), tree.root_origin()) == 0.0);
    CHECK(serialize_to_string(back) == bytes);
    CHECK(tree_cells(back) == tree_cells(tree));
}

TEST_CASE("malformed octree streams raise parse errors") {
    std::istringstream empty("");
    CHECK_THROWS_AS(static_cast<void>(read_octree(empty)), Error);
    std::istringstream bad_magic("NOPE");
    CHECK_THROWS_AS(static_cast<void>(read_octree(bad_magic)), Error);

    PointCloud cloud;
    cloud.points.push_back({0, 0, 0});
    std::string bytes = serialize_to_string(build_octree(cloud, 1.0));
    bytes.resize(bytes.size() - 2);  // truncate the payload
    std::istringstream truncated(bytes);
    try {
        static_cast<void>(read_octree(truncated));
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse);
    }
}

TEST_CASE("build_octree input validation") {
    PointCloud empty;
    CHECK_THROWS_AS(static_cast<void>(build_octree(empty, 0.5)), Error);

    PointCloud cloud;
    cloud.points.push_back({1, 2, 3});
    CHECK_THROWS_AS(static_cast<void>(build_octree(cloud, 0.0)), Error);
    CHECK_THROWS_AS(static_cast<void>(build_octree(cloud, -1.0)), Error);

    PointCloud nan_cloud;
    nan_cloud.points.push_back({std::nan(""), 0, 0});
    CHECK_THROWS_AS(static_cast<void>(build_octree(nan_cloud, 0.5)), Error);

    // Extent needing more than 21 levels at the resolution.
    PointCloud wide;
    wide.points.push_back({0, 0, 0});
    wide.points.push_back({1e9, 0, 0});
    CHECK_THROWS_AS(static_cast<void>(build_octree(wide, 0.001)), Error);
}
