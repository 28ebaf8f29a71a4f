#include <numbers>

#include <benchmark/benchmark.h>

#include "spinramp/adiabaticity.hpp"
#include "spinramp/bloch_sim.hpp"
#include "spinramp/cycle.hpp"

using namespace spinramp;

namespace {

constexpr double kW1 = 2.0 * std::numbers::pi * 12.5e3;

const CycleSpec& cpmg() {
    static const CycleSpec c = CycleSpec::from_flip(6.4, std::numbers::pi, kW1);
    return c;
}

void BM_ClosedFormModes(benchmark::State& state) {
    double w = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(closed_form_modes(cpmg(), w * kW1));
        w = w < 5.0 ? w + 1e-3 : 0.0;
    }
}
BENCHMARK(BM_ClosedFormModes);

void BM_CyclePropagatorOnRamp(benchmark::State& state) {
    const OffsetTrajectory ramp({0.0, 1e4 * cpmg().echo_spacing}, {0.0, 4.4 * kW1});
    const int substeps = static_cast<int>(state.range(0));
    double t = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cycle_propagator(cpmg(), ramp, t, substeps));
        t += cpmg().echo_spacing;
    }
}
BENCHMARK(BM_CyclePropagatorOnRamp)->Arg(1)->Arg(kDefaultSubsteps)->Arg(32);

void BM_ThetaProfile(benchmark::State& state) {
    const auto grid = uniform_grid(0.0, 4.4, 5e-4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(theta_profile(cpmg(), grid));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(grid.size()));
}
BENCHMARK(BM_ThetaProfile)->Unit(benchmark::kMillisecond);

// Isochromat-cycles per second for a 64-node ensemble across the fig1 ramp.
void BM_Ensemble(benchmark::State& state) {
    EnsembleSpec e;
    e.n_nodes = static_cast<int>(state.range(0));
    const auto ramp = FieldRamp::linear(8e-3, 1.45);
    const int echoes = 182;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_ensemble(cpmg(), ramp, echoes, e));
    }
    state.SetItemsProcessed(state.iterations() * echoes * e.n_nodes);
}
BENCHMARK(BM_Ensemble)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
