// The O(N^2) continuous-noise prediction is the one hot kernel in the grid
// oracle. This compares the OpenMP-parallel kernel against the serial
// reference it is tested against, across grid sizes.

#include <benchmark/benchmark.h>

#include "msf/densities.hpp"
#include "msf/oracle.hpp"

namespace {

using msf::densities::DensityModel;
using msf::densities::Gaussian;
using msf::oracle::GridDensity;

GridDensity make_grid(int n) {
    return msf::oracle::to_grid(DensityModel(Gaussian{0.0, 1.0}), -12.0, 12.0,
                                n)
        .grid;
}

const DensityModel& noise() {
    static const DensityModel n{Gaussian{0.0, 0.5}};
    return n;
}

void BM_TimeUpdateParallel(benchmark::State& state) {
    const GridDensity g = make_grid(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        GridDensity out = msf::oracle::grid_time_update(g, noise(), 0.9);
        benchmark::DoNotOptimize(out.values.data());
    }
    state.SetComplexityN(state.range(0));
}

void BM_TimeUpdateSerial(benchmark::State& state) {
    const GridDensity g = make_grid(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        GridDensity out = msf::oracle::grid_time_update_serial(g, noise(), 0.9);
        benchmark::DoNotOptimize(out.values.data());
    }
    state.SetComplexityN(state.range(0));
}

void BM_TimeUpdateDiscrete(benchmark::State& state) {
    const GridDensity g = make_grid(static_cast<int>(state.range(0)));
    msf::densities::DiscreteNoise atoms;
    atoms.atoms = {-0.8, 0.8};
    atoms.probabilities = {0.5, 0.5};
    for (auto _ : state) {
        GridDensity out = msf::oracle::grid_time_update(g, atoms, 0.9);
        benchmark::DoNotOptimize(out.values.data());
    }
    state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK(BM_TimeUpdateParallel)
    ->Arg(512)
    ->Arg(2048)
    ->Arg(8192)
    ->Unit(benchmark::kMillisecond)
    ->Complexity(benchmark::oNSquared);
BENCHMARK(BM_TimeUpdateSerial)
    ->Arg(512)
    ->Arg(2048)
    ->Arg(8192)
    ->Unit(benchmark::kMillisecond)
    ->Complexity(benchmark::oNSquared);
BENCHMARK(BM_TimeUpdateDiscrete)
    ->Arg(512)
    ->Arg(2048)
    ->Arg(8192)
    ->Unit(benchmark::kMillisecond)
    ->Complexity(benchmark::oN);

BENCHMARK_MAIN();
