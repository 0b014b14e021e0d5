#include <benchmark/benchmark.h>

#include <map>
#include <memory>

#include "pushedfront/bbm_sim.hpp"
#include "pushedfront/fkpp.hpp"
#include "pushedfront/kspine.hpp"
#include "pushedfront/spectral.hpp"

using namespace pushedfront;

namespace {

const Potential& step10() {
  static const Potential p = Potential::step(10.0);
  return p;
}

const SpectralData& spectral(double L) {
  static std::map<double, std::unique_ptr<SpectralData>> cache;
  auto& s = cache[L];
  if (!s) s = std::make_unique<SpectralData>(step10(), L);
  return *s;
}

void BM_TopEigenvalue(benchmark::State& state) {
  const double L = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(eigenvalue(step10(), L, 1));
}
BENCHMARK(BM_TopEigenvalue)->Arg(10)->Arg(30);

void BM_SpectralData(benchmark::State& state) {
  const double L = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(SpectralData(step10(), L).lambda(0));
}
BENCHMARK(BM_SpectralData)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  SimConfig c;
  c.potential = step10();
  c.mu = classify_regime(limit_top_eigenvalue(step10())).mu;
  c.cutoff = 5.0;
  c.horizon = static_cast<double>(state.range(0));
  c.x0 = 1.5;
  std::uint64_t r = 0;
  std::size_t nodes = 0;
  for (auto _ : state) nodes += simulate(c, r++).nodes.size();
  state.counters["nodes/replica"] = benchmark::Counter(static_cast<double>(nodes) / static_cast<double>(r));
}
BENCHMARK(BM_Simulate)->Arg(2)->Arg(10)->Unit(benchmark::kMicrosecond);

void BM_SpineDraw(benchmark::State& state) {
  const SpineSampler s(spectral(31.24));
  RandomStream rng(1, 0, kTestStream);
  const double dt = static_cast<double>(state.range(0)) / 1000.0;
  double x = 1.0;
  for (auto _ : state) x = s.draw(x, dt, rng);
  benchmark::DoNotOptimize(x);
}
BENCHMARK(BM_SpineDraw)->Arg(20)->Arg(1000);

void BM_TwoSpineTree(benchmark::State& state) {
  const SpineSampler s(spectral(31.24));
  RandomStream rng(2, 0, kTestStream);
  for (auto _ : state) benchmark::DoNotOptimize(sample_kspine(s, 2, 1.0, 1.0, rng, 1000.0));
}
BENCHMARK(BM_TwoSpineTree);

void BM_Fkpp(benchmark::State& state) {
  const double N = static_cast<double>(state.range(0));
  const auto rc = classify_regime(limit_top_eigenvalue(step10()));
  const SpectralData& sp = spectral(cutoff_length(rc, N));
  FkppOptions o;
  o.T_end = N;
  o.snapshots = 10;
  for (auto _ : state) benchmark::DoNotOptimize(solve_fkpp(sp, o).u_at(2.0));
}
BENCHMARK(BM_Fkpp)->Arg(50)->Unit(benchmark::kMillisecond)->Iterations(2);

}  // namespace

BENCHMARK_MAIN();
