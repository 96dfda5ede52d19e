#include <benchmark/benchmark.h>

#include <vector>

#include "ensdep/network.hpp"
#include "ensdep/random.hpp"
#include "ensdep/trainer.hpp"

namespace {

Eigen::MatrixXd random_inputs(const ensdep::NetworkConfig& cfg, int batch) {
  ensdep::Rng rng(3);
  Eigen::MatrixXd x(cfg.F0, cfg.T0 * batch);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  return x;
}

void BM_ForwardBatch(benchmark::State& state) {
  const ensdep::NetworkConfig cfg;
  const auto params = ensdep::init_params(cfg, 0);
  const int batch = static_cast<int>(state.range(0));
  const auto x = random_inputs(cfg, batch);
  for (auto _ : state) benchmark::DoNotOptimize(ensdep::forward_batch(params, x));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ForwardBatch)->Arg(1)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const ensdep::NetworkConfig cfg;
  auto params = ensdep::init_params(cfg, 0);
  auto adadelta = ensdep::AdadeltaState::zeros(cfg);
  const int batch = static_cast<int>(state.range(0));
  const auto x = random_inputs(cfg, batch);
  std::vector<int> y(static_cast<std::size_t>(batch));
  for (int i = 0; i < batch; ++i) y[static_cast<std::size_t>(i)] = i % 2;
  for (auto _ : state) {
    const auto cache = ensdep::forward_batch(params, x);
    const auto grads = ensdep::backward_batch(params, cache, x, y);
    ensdep::adadelta_step(params, grads, adadelta, 1.0, 0.95, 1e-6);
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_TrainStep)->Arg(80)->Unit(benchmark::kMillisecond);

}  // namespace
