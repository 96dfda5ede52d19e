#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "ensdep/ensemble.hpp"
#include "ensdep/random.hpp"

namespace {

// M machines scoring 20 speakers with 30 crops each.
std::vector<ensdep::PredictionSet> pool(int machines) {
  ensdep::Rng rng(4);
  std::vector<ensdep::PredictionSet> out(static_cast<std::size_t>(machines));
  for (int m = 0; m < machines; ++m) {
    out[m].machine = m;
    for (int s = 0; s < 20; ++s) {
      auto& sc = out[m].speakers["spk" + std::to_string(s)];
      for (std::uint32_t l = 0; l < 30; ++l) {
        sc.crop_indices.push_back(l);
        sc.probabilities.push_back(rng.uniform());
      }
    }
  }
  return out;
}

void BM_Fuse(benchmark::State& state) {
  const auto machines = pool(static_cast<int>(state.range(1)));
  const auto method = ensdep::fusion_method_from_int(static_cast<int>(state.range(0)));
  ensdep::Rng rng(5);
  for (auto _ : state) benchmark::DoNotOptimize(ensdep::fuse(machines, method, rng));
}
BENCHMARK(BM_Fuse)->ArgsProduct({{1, 2, 3}, {1, 10, 50}});

}  // namespace
