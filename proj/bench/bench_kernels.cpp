// Serial reference vs OpenMP kernels on the scans that dominate suite
// construction: the 4096^2 oracle lattice and the profile cell count.

#include <benchmark/benchmark.h>

#include <span>

#include "fedelim/kernels.hpp"
#include "fedelim/objectives.hpp"

namespace {

using fedelim::BoxDomain;
using fedelim::ObjectiveKind;

double himmelblau(std::span<const double> x) {
  return -fedelim::raw_value(ObjectiveKind::himmelblau, x);
}

double garland(std::span<const double> x) {
  return fedelim::raw_value(ObjectiveKind::garland, x);
}

void BM_LatticeArgmaxSerial(benchmark::State& state) {
  const fedelim::kernels::Lattice lattice{BoxDomain::cube(2, -5.0, 5.0),
                                          static_cast<std::uint64_t>(state.range(0))};
  for (auto _ : state) {
    benchmark::DoNotOptimize(fedelim::kernels::lattice_argmax_serial(himmelblau, lattice));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(lattice.size()));
}

void BM_LatticeArgmaxParallel(benchmark::State& state) {
  const fedelim::kernels::Lattice lattice{BoxDomain::cube(2, -5.0, 5.0),
                                          static_cast<std::uint64_t>(state.range(0))};
  for (auto _ : state) {
    benchmark::DoNotOptimize(fedelim::kernels::lattice_argmax(himmelblau, lattice));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(lattice.size()));
}

void BM_CountSerial(benchmark::State& state) {
  const auto box = BoxDomain::cube(1, 0.0, 1.0);
  const auto cells = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fedelim::kernels::count_cells_at_least_serial(garland, box, cells, 0.9));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_CountParallel(benchmark::State& state) {
  const auto box = BoxDomain::cube(1, 0.0, 1.0);
  const auto cells = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fedelim::kernels::count_cells_at_least(garland, box, cells, 0.9));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_RandomArgmaxSerial(benchmark::State& state) {
  const auto box = BoxDomain::cube(10, -1.0, 1.0);
  auto f = [](std::span<const double> x) {
    return -fedelim::raw_value(ObjectiveKind::rastrigin, x);
  };
  for (auto _ : state) {
    benchmark::DoNotOptimize(fedelim::kernels::random_argmax_serial(
        f, box, static_cast<std::uint64_t>(state.range(0)), 1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_RandomArgmaxParallel(benchmark::State& state) {
  const auto box = BoxDomain::cube(10, -1.0, 1.0);
  auto f = [](std::span<const double> x) {
    return -fedelim::raw_value(ObjectiveKind::rastrigin, x);
  };
  for (auto _ : state) {
    benchmark::DoNotOptimize(fedelim::kernels::random_argmax(
        f, box, static_cast<std::uint64_t>(state.range(0)), 1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_LatticeArgmaxSerial)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LatticeArgmaxParallel)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CountSerial)->Arg(1 << 16)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CountParallel)->Arg(1 << 16)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RandomArgmaxSerial)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RandomArgmaxParallel)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
