#include <benchmark/benchmark.h>

#include <vector>

#include "magidyn/bessel.hpp"
#include "magidyn/integrator.hpp"
#include "magidyn/kernel_bundle.hpp"
#include "magidyn/magi_solver.hpp"
#include "magidyn/testbed.hpp"

using namespace magidyn;

namespace {

std::vector<double> even_grid(long n, double dt) {
  std::vector<double> g;
  for (long i = 0; i < n; ++i) g.push_back(dt * static_cast<double>(i));
  return g;
}

void BM_BesselK(benchmark::State& st) {
  double x = 0.05;
  for (auto _ : st) {
    benchmark::DoNotOptimize(bessel_k(kMaternNu, x));
    x = x < 30.0 ? x * 1.01 : 0.05;
  }
}
BENCHMARK(BM_BesselK);

void BM_MaternDerivatives(benchmark::State& st) {
  const KernelHyper h{1.0, 0.7};
  double d = 0.01;
  for (auto _ : st) {
    benchmark::DoNotOptimize(matern_derivatives(d, h));
    d = d < 3.0 ? d * 1.01 : 0.01;
  }
}
BENCHMARK(BM_MaternDerivatives);

void BM_BuildBundle(benchmark::State& st) {
  const auto g = even_grid(st.range(0), 0.025);
  for (auto _ : st) benchmark::DoNotOptimize(build_bundle(g, {10.0, 0.8}));
}
BENCHMARK(BM_BuildBundle)->Arg(80)->Arg(240)->Arg(401)->Unit(benchmark::kMillisecond);

void BM_LorenzTruth(benchmark::State& st) {
  const RegimeSpec r = default_regime(RegimeName::ChaoticButterfly);
  const auto g = even_grid(401, 0.025);
  for (auto _ : st) benchmark::DoNotOptimize(ground_truth(r, g));
}
BENCHMARK(BM_LorenzTruth)->Unit(benchmark::kMillisecond);

void BM_LogPosteriorGradient(benchmark::State& st) {
  const ObservationSet obs =
      make_dataset(default_regime(RegimeName::StableCanonical), static_cast<double>(st.range(0)), 40.0, 1.5e-3, 1);
  LorenzSystem lorenz;
  SolverSettings s;
  s.phi = std::vector<KernelHyper>(3, KernelHyper{10.0, 0.8});
  s.sigma = Vector::Constant(3, 0.01);
  const DiscretizedGrid grid = discretize(obs.times, 0);
  const MagiModel m = build_model(obs, grid, lorenz, s);
  MagiState x;
  x.X = interpolate_observations(obs, grid, Vector::Zero(3));
  x.theta = m.prior.median();
  const Vector flat = flatten(x);
  Vector g;
  for (auto _ : st) benchmark::DoNotOptimize(log_posterior_flat(m, flat, &g));
}
BENCHMARK(BM_LogPosteriorGradient)->Arg(2)->Arg(6)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
