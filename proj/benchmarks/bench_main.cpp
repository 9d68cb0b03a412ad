#include "wofem/interp.hpp"
#include "wofem/solve.hpp"

#include <benchmark/benchmark.h>

using namespace wofem;

namespace {

MeshPtr square(int n) { return std::make_shared<const SimplicialMesh>(structured_rect(n, n)); }

const Weight kWeight = Weight::radial_power(Vec2(0.5, 0.5), 0.5);

}  // namespace

static void BM_RefineUniform(benchmark::State& st) {
  const SimplicialMesh m = structured_rect(static_cast<int>(st.range(0)), static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(refine_uniform(m));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(m.num_cells()));
}
BENCHMARK(BM_RefineUniform)->Arg(32)->Arg(64);

static void BM_Residual(benchmark::State& st) {
  const MeshPtr m = square(static_cast<int>(st.range(0)));
  const Discretization d(m, make_shifted_power(3.0, 0.1), kWeight, RhsFunctional::exact_gradient(sine_field().gradient));
  const FeFunction u = FeFunction::interpolate(m, sine_field().value, true);
  for (auto _ : st) benchmark::DoNotOptimize(d.residual(u));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(m->num_cells()));
}
BENCHMARK(BM_Residual)->Arg(32)->Arg(64);

static void BM_NewtonMatrix(benchmark::State& st) {
  const MeshPtr m = square(static_cast<int>(st.range(0)));
  const Discretization d(m, make_shifted_power(3.0, 0.1), kWeight, RhsFunctional::zero());
  const FeFunction u = FeFunction::interpolate(m, sine_field().value, true);
  for (auto _ : st) benchmark::DoNotOptimize(d.newton_matrix(u));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(m->num_cells()));
}
BENCHMARK(BM_NewtonMatrix)->Arg(32)->Arg(64);

static void BM_SolveEquation(benchmark::State& st) {
  const MeshPtr m = square(static_cast<int>(st.range(0)));
  const Discretization d(m, make_power(1.5), Weight::constant(1.0), RhsFunctional::exact_gradient(sine_field().gradient));
  for (auto _ : st) benchmark::DoNotOptimize(solve_equation(d));
}
BENCHMARK(BM_SolveEquation)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_ApCharacteristic(benchmark::State& st) {
  BallSampler s;
  s.n_balls = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(ap_characteristic(kWeight, 2.0, s));
}
BENCHMARK(BM_ApCharacteristic)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_PpApply(benchmark::State& st) {
  const MeshPtr m = square(static_cast<int>(st.range(0)));
  const PpInterpolant pp(m);
  const FeFunction w = random_fe_function(m, 1);
  for (auto _ : st) benchmark::DoNotOptimize(pp.apply(w));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(m->num_dofs()));
}
BENCHMARK(BM_PpApply)->Arg(32)->Arg(64);

static void BM_LuxemburgNorm(benchmark::State& st) {
  const MeshPtr m = square(32);
  const WeightedQuadrature q = build_quadrature(m, kWeight);
  const std::vector<double> g = sample_function(q, sine_field().value);
  const NFunction phi = make_shifted_power(3.0, 0.1);
  for (auto _ : st) benchmark::DoNotOptimize(luxemburg_norm(phi, q, g));
}
BENCHMARK(BM_LuxemburgNorm)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
