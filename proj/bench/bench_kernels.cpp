// Serial reference vs OpenMP path on the heavier corpus workloads.
// Run with OMP_NUM_THREADS set to compare thread counts.

#include <benchmark/benchmark.h>

#include "paracon/corpus.hpp"
#include "paracon/flag.hpp"
#include "paracon/global.hpp"
#include "paracon/transport.hpp"

using namespace paracon;

namespace {

const std::vector<CorpusEntry>& corpus() {
  static const auto c = load_corpus();
  return c;
}

Exec mode(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

void label(benchmark::State& state) { state.SetLabel(state.range(0) == 0 ? "serial" : "parallel"); }

void BM_RegularityScan(benchmark::State& state) {
  const Manifest& m = find_entry(corpus(), "sphere").manifest;
  const Connection conn = m.build_connection();
  const FlagOptions fo = m.global_options(Exec::serial).flag;
  std::vector<double> theta, phi;
  for (int i = 0; i < 16; ++i) {
    theta.push_back(0.3 + 2.5 * i / 15.0);
    phi.push_back(6.0 * i / 16.0);
  }
  const Grid grid = Grid::product({theta, phi});
  for (auto _ : state) benchmark::DoNotOptimize(regularity_scan(conn, grid, fo, mode(state)));
  label(state);
}

void BM_PhiPeriods(benchmark::State& state) {
  const Manifest& m = find_entry(corpus(), "sphere").manifest;
  const Connection conn = m.build_connection();
  const auto loops = m.build_loops(conn.domain());
  const PhiSampler phi(conn, m.global_options(Exec::serial).flag);
  for (auto _ : state) benchmark::DoNotOptimize(phi_periods(phi, loops, 1024, mode(state)));
  label(state);
}

void BM_ParallelExtend(benchmark::State& state) {
  const Manifest& m = find_entry(corpus(), "punctured-plane").manifest;
  const Connection conn = m.build_connection();
  const Vec w = m.reference_basis(conn.domain(), m.base_point).col(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(parallel_extend(conn, m.base_point, w, 0.4, 9, 512, nullptr, mode(state)));
  }
  label(state);
}

}  // namespace

BENCHMARK(BM_RegularityScan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PhiPeriods)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ParallelExtend)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
