#include <benchmark/benchmark.h>

#include <numbers>

#include "optocool/bath.hpp"
#include "optocool/fock.hpp"
#include "optocool/langevin.hpp"
#include "optocool/spectrum.hpp"
#include "optocool/steady_state.hpp"

using namespace optocool;

namespace {

EffectiveBath desk_bath(double n_bar, double Gamma, double g) {
  BathInputs in;
  in.gamma_m = 1.0;
  in.omega_m = 62.8;
  in.n_bar = n_bar;
  in.Gamma = Gamma;
  in.g = g;
  in.phi = -std::numbers::pi / 2.0;
  return build_bath(in);
}

void BM_SpectrumGrid(benchmark::State& state) {
  const EffectiveBath b = desk_bath(100.0, 200.0, 50.0);
  const auto grid = default_grid(b, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eval_spectrum(b, grid));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SpectrumGrid)->Arg(4096)->Arg(65536);

void BM_SumRule(benchmark::State& state) {
  const EffectiveBath b = desk_bath(100.0, 200.0, 50.0);
  for (auto _ : state) benchmark::DoNotOptimize(sum_rule_check(b));
}
BENCHMARK(BM_SumRule)->Unit(benchmark::kMicrosecond);

void BM_ClosedForm(benchmark::State& state) {
  const EffectiveBath b = desk_bath(6.25e11, 207.0, 1e5);
  for (auto _ : state) benchmark::DoNotOptimize(closed_form_moments(b));
}
BENCHMARK(BM_ClosedForm);

void BM_Lyapunov(benchmark::State& state) {
  EffectiveBath b = desk_bath(6.25e11, 207.0, 1e5);
  b.phi = -1.0;
  for (auto _ : state) benchmark::DoNotOptimize(lyapunov_moments(b));
}
BENCHMARK(BM_Lyapunov);

void BM_FockApply(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  BathInputs in;
  in.gamma_m = 1.0;
  in.omega_m = 10.0;
  in.n_bar = 3.0;
  in.Gamma = 40.0;
  in.g = 8.0;
  in.phi = -std::numbers::pi / 2.0;
  const MasterEquationGenerator gen = build_generator(build_bath(in), dim);
  const DensityMatrix rho = thermal_state(3.0, dim);
  for (auto _ : state) benchmark::DoNotOptimize(gen.apply(rho));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FockApply)->RangeMultiplier(2)->Range(32, 256)->Complexity(benchmark::oNSquared);

// Two trajectories of 2^16 exact-scheme steps, Welch PSD included.
void BM_SimulateTrajectory(benchmark::State& state) {
  const EffectiveBath b = desk_bath(100.0, 200.0, 50.0);
  SimConfig cfg = recommended_config(b);
  cfg.n_traj = 2;
  cfg.threads = 1;
  cfg.welch_segment = 1024;
  cfg.t_sample = 65536 * cfg.dt;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(b, cfg));
  state.SetItemsProcessed(state.iterations() * 2 * 65536);
}
BENCHMARK(BM_SimulateTrajectory)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
