#include <benchmark/benchmark.h>

#include <random>

#include "odl/cost_model.hpp"
#include "odl/network.hpp"
#include "odl/pose.hpp"

using namespace odl;

namespace {

ArchDescriptor arch_for(int which) { return which == 0 ? desk_descriptor() : reference_descriptor(); }

UpdateStrategy strategy_for(int which) {
  switch (which) {
    case 0: return UpdateStrategy::all_wb();
    case 1: return UpdateStrategy::bn_wb();
    case 2: return UpdateStrategy::fc_wb();
    default: return UpdateStrategy::bias_only();
  }
}

Tensor4<float> batch(const ArchDescriptor& arch, int n) {
  Tensor4<float> t;
  t.n = n;
  t.shape = arch.input;
  t.data.resize(static_cast<std::size_t>(n) * arch.input.elements());
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : t.data) v = u(rng);
  return t;
}

// Args: {arch (0 desk, 1 reference), strategy, batch}.
void BM_TrainStep(benchmark::State& state) {
  const auto arch = arch_for(static_cast<int>(state.range(0)));
  const auto strategy = strategy_for(static_cast<int>(state.range(1)));
  const int n = static_cast<int>(state.range(2));
  ModelParams<float> params(arch);
  init_uniform_fan_in(params, arch, 1);
  const auto x = batch(arch, n);
  const std::vector<std::array<double, 4>> up(static_cast<std::size_t>(n), {1.0, -1.0, 0.5, 0.25});
  for (auto _ : state) {
    auto fr = forward(params, arch, x, Mode::train, strategy);
    auto g = backward(params, arch, fr.cache, up, strategy);
    benchmark::DoNotOptimize(g);
  }
  const double macs = static_cast<double>(train_step_macs(arch, strategy)) * n;
  state.counters["MAC/s"] = benchmark::Counter(macs, benchmark::Counter::kIsIterationInvariantRate);
  state.SetLabel(strategy.name());
}

void BM_Forward(benchmark::State& state) {
  const auto arch = arch_for(static_cast<int>(state.range(0)));
  const int n = static_cast<int>(state.range(1));
  ModelParams<float> params(arch);
  init_uniform_fan_in(params, arch, 1);
  const auto x = batch(arch, n);
  for (auto _ : state) {
    auto fr = forward(params, arch, x, Mode::eval, UpdateStrategy::none());
    benchmark::DoNotOptimize(fr);
  }
  state.counters["MAC/s"] = benchmark::Counter(static_cast<double>(forward_macs(arch)) * n,
                                               benchmark::Counter::kIsIterationInvariantRate);
}

void BM_CostReport(benchmark::State& state) {
  const auto arch = reference_descriptor();
  const auto strategy = strategy_for(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cost_report(arch, strategy));
}

void BM_ComposeInvert(benchmark::State& state) {
  const Pose4 a{1.0, 0.2, -0.1, 0.3}, b{0.4, -0.5, 0.2, -1.2};
  for (auto _ : state) {
    Pose4 c = compose(invert(a), b);
    benchmark::DoNotOptimize(c);
  }
}

}  // namespace

BENCHMARK(BM_TrainStep)
    ->ArgsProduct({{0}, {0, 1, 2, 3}, {32}})
    ->ArgsProduct({{1}, {0, 1, 2, 3}, {4}})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Forward)->Args({0, 32})->Args({1, 4})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CostReport)->DenseRange(0, 3);
BENCHMARK(BM_ComposeInvert);

BENCHMARK_MAIN();
