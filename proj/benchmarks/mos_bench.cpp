#include <benchmark/benchmark.h>

#include <string>

#include "bench_util.hpp"
#include "refiner/mos.hpp"

namespace refiner::bench {
namespace {

std::vector<mos::RatingRecord> panel(int annotators, int images) {
  const auto r = noise(static_cast<std::size_t>(annotators) * images * 3, 21);
  std::vector<mos::RatingRecord> out;
  std::size_t k = 0;
  for (int a = 0; a < annotators; ++a) {
    for (int i = 0; i < images; ++i) {
      for (Dimension d : kDimensions) out.push_back({"a" + std::to_string(a), "i" + std::to_string(i), d, 1.0 + 4.0 * r[k++]});
    }
  }
  return out;
}

void BM_MosPipeline(benchmark::State& state) {
  const auto p = panel(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(mos::run_pipeline(p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.size()));
}
BENCHMARK(BM_MosPipeline)->Args({12, 100})->Args({12, 1000})->Args({30, 2000});

}  // namespace
}  // namespace refiner::bench
