#include <benchmark/benchmark.h>

#include <complex>
#include <vector>

#include "ensdep/features.hpp"
#include "ensdep/random.hpp"

namespace {

ensdep::SampleCrop noise_crop(std::size_t n) {
  ensdep::Rng rng(1);
  ensdep::SampleCrop c;
  c.samples.resize(n);
  for (auto& v : c.samples) v = rng.uniform(-1, 1);
  return c;
}

void BM_Dft(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::complex<double>> buf(n);
  ensdep::Rng rng(2);
  for (auto& z : buf) z = {rng.uniform(), rng.uniform()};
  for (auto _ : state) {
    ensdep::dft_inplace(buf);
    benchmark::DoNotOptimize(buf.data());
  }
}
BENCHMARK(BM_Dft)->Arg(1024)->Arg(1000);

void BM_Featurize4s(benchmark::State& state) {
  const auto crop = noise_crop(64000);
  for (auto _ : state) benchmark::DoNotOptimize(ensdep::featurize(crop, ensdep::StftConfig{}));
}
BENCHMARK(BM_Featurize4s)->Unit(benchmark::kMillisecond);

}  // namespace
