#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "sim3align/alignment.hpp"
#include "sim3align/rng.hpp"
#include "sim3align/scale_series.hpp"

using namespace sim3align;

namespace {

TrajectoryPair make_pair(std::size_t n) {
    Rng rng(1);
    const Sim3Transform gt(7.3, Rotation3::from_axis_angle({1, 2, 3}, 0.9), {4, 5, 6});
    TrajectoryPair pair;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = static_cast<double>(i) * 0.01;
        const Vec3 p{2.0 * std::sin(2.0 * u), 1.4 * std::sin(3.0 * u + 0.3),
                     0.8 * std::sin(u)};
        const Vec3 noisy = p + Vec3{rng.normal(0.01), rng.normal(0.01), rng.normal(0.01)};
        pair.slam.push_back({u, Sim3Transform(1.0, Rotation3::identity(), p)});
        pair.reference.push_back({u, Sim3Transform(1.0, Rotation3::identity(), gt.apply(noisy))});
        pair.associations.emplace_back(i, i);
    }
    return pair;
}

void BM_Align(benchmark::State& state) {
    const TrajectoryPair pair = make_pair(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(align(pair));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Align)->Arg(100)->Arg(1000)->Arg(10000);

void BM_ComputeFactors(benchmark::State& state) {
    const TrajectoryPair pair = make_pair(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(compute_factors(pair));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ComputeFactors)->Arg(1000)->Arg(10000);

void BM_MaxEigenvector(benchmark::State& state) {
    const TrajectoryPair pair = make_pair(500);
    const auto [slam_c, ref_c] = centroids(pair);
    const Mat4 n = build_n_matrix(cross_covariance(pair, slam_c, ref_c));
    for (auto _ : state) {
        benchmark::DoNotOptimize(max_eigenvector_sym4(n));
    }
}
BENCHMARK(BM_MaxEigenvector);

}  // namespace

BENCHMARK_MAIN();
