// Serial references against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <string>

#include "oltc/bnb.hpp"
#include "oltc/powerflow.hpp"
#include "oltc/scenario.hpp"

using namespace oltc;

namespace {

const NetworkCase& feeder() {
  static const NetworkCase c = load_case(std::string(OLTC_DATA_DIR) + "/case33.json");
  return c;
}

void BM_EnumerateSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_taps_serial(feeder()).best_losses_kw);
  state.counters["grid_points"] = static_cast<double>(tap_grid_size(feeder()));
}

void BM_EnumerateParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_taps(feeder()).best_losses_kw);
  state.counters["grid_points"] = static_cast<double>(tap_grid_size(feeder()));
}

// Argument: nodes evaluated per batch (1 is the single-threaded reference).
void BM_BranchAndBound(benchmark::State& state) {
  const OpfModel model = build_opf(feeder());
  BnbSettings s;
  s.threads = static_cast<int>(state.range(0));
  long nodes = 0;
  for (auto _ : state) {
    const BnbResult r = branch_and_bound(model.program, tap_groups(model), s);
    nodes = r.stats.nodes;
    benchmark::DoNotOptimize(r.objective);
  }
  state.counters["nodes"] = static_cast<double>(nodes);
}

void BM_FixedTapRelaxation(benchmark::State& state) {
  const OpfModel model = fix_taps(build_opf(feeder()), {{2, 2, 2, 2}});
  for (auto _ : state) benchmark::DoNotOptimize(solve_relaxation(model.program).objective);
}

}  // namespace

BENCHMARK(BM_EnumerateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnumerateParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BranchAndBound)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_FixedTapRelaxation)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
