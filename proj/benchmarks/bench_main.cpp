#include <benchmark/benchmark.h>

#include <random>

#include "heomfcs/correlation.hpp"
#include "heomfcs/expfit.hpp"
#include "heomfcs/hierarchy.hpp"
#include "heomfcs/model.hpp"
#include "heomfcs/propagator.hpp"

namespace {

using namespace heomfcs;

SystemModel bench_model(double lambda) {
  BathModel left, right;
  left.name = "L";
  left.density.family = BathFamily::OhmicExpCutoff;
  left.density.lambda = lambda;
  left.density.omega_c = 3.0;
  left.temperature = 10.0;
  right = left;
  right.name = "R";
  right.counted = true;
  return build_two_level_model(1.0, 0.0, {left, right},
                               MeasurementScheme::TwoPoint);
}

void BM_rhs_apply(benchmark::State& state) {
  const auto model = bench_model(0.15);
  DecomposeOptions opts;
  opts.max_terms = 4;
  const auto basis = build_basis(model, opts);
  std::vector<int> terms;
  for (const auto& b : basis.baths) terms.push_back(b.terms());
  const int n_max = static_cast<int>(state.range(0));
  const auto space = IndexSpace::enumerate(terms, n_max, 1);
  const auto tables = cascade_coefficients(model, basis, 1);
  const Propagator prop(model, basis, tables, space,
                        PropagationMode::MomentCascade);
  auto x = prop.initial_state();
  std::vector<Complex> y(x.size());
  for (auto _ : state) {
    prop.rhs(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * space.total());
}
BENCHMARK(BM_rhs_apply)->Arg(4)->Arg(6)->Arg(8);

void BM_enumerate(benchmark::State& state) {
  const int n_max = static_cast<int>(state.range(0));
  for (auto _ : state) {
    const auto space = IndexSpace::enumerate(2, 4, n_max, 2);
    benchmark::DoNotOptimize(space.total());
  }
}
BENCHMARK(BM_enumerate)->Arg(6)->Arg(8)->Arg(10);

void BM_pole_estimate(benchmark::State& state) {
  BathModel bath;
  bath.name = "R";
  bath.density.family = BathFamily::OhmicExpCutoff;
  bath.density.lambda = 0.3;
  bath.density.omega_c = 3.0;
  bath.temperature = 10.0;
  const int n = 240;
  const double dt = 0.025;
  std::vector<Complex> samples(n);
  for (int i = 0; i < n; ++i) samples[i] = bare_correlation(bath, dt * i);
  for (auto _ : state) {
    auto poles = estimate_poles(samples, dt, 6);
    benchmark::DoNotOptimize(poles.data());
  }
}
BENCHMARK(BM_pole_estimate);

void BM_bare_correlation(benchmark::State& state) {
  BathModel bath;
  bath.name = "R";
  bath.density.family = BathFamily::OhmicExpCutoff;
  bath.density.lambda = 0.3;
  bath.density.omega_c = 3.0;
  bath.temperature = 10.0;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ts(0.0, 6.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bare_correlation(bath, ts(rng)));
  }
}
BENCHMARK(BM_bare_correlation);

}  // namespace

BENCHMARK_MAIN();
