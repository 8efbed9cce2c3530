#include <benchmark/benchmark.h>

#include "sim3align/octree.hpp"
#include "sim3align/rng.hpp"

using namespace sim3align;

namespace {

PointCloud make_cloud(std::size_t n) {
    Rng rng(2);
    PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        cloud.points.push_back({rng.uniform(-5.0, 5.0), rng.uniform(-2.5, 2.5),
                                rng.uniform(0.0, 1.2)});
    }
    return cloud;
}

void BM_BuildOctree(benchmark::State& state) {
    const PointCloud cloud = make_cloud(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_octree(cloud, 0.05));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildOctree)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_QueryOccupied(benchmark::State& state) {
    const OccupancyOctree tree = build_octree(make_cloud(100000), 0.05);
    const Aabb box{{-1.0, -1.0, 0.0}, {1.0, 1.0, 1.0}};
    for (auto _ : state) {
        benchmark::DoNotOptimize(tree.query_occupied(box));
    }
}
BENCHMARK(BM_QueryOccupied);

}  // namespace

BENCHMARK_MAIN();
