#include <benchmark/benchmark.h>

#include <random>

#include "cclk/kernels.hpp"
#include "cclk/losses.hpp"
#include "cclk/operator.hpp"

using cclk::Matrix;

namespace {

Matrix gaussian(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.data()) v = g(rng);
  return m;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = gaussian(n, n, 1);
  const Matrix b = gaussian(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(cclk::matmul(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(32, 256)->Complexity();

void BM_ConditionalWeights(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  const Matrix kz = cclk::z_gram(gaussian(b, 8, 3), cclk::KernelSpec{});
  for (auto _ : state) benchmark::DoNotOptimize(cclk::conditional_weights(kz, cclk::OperatorConfig{}));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ConditionalWeights)->RangeMultiplier(2)->Range(32, 256)->Complexity();

void BM_LossForwardBackward(benchmark::State& state) {
  const auto kind = static_cast<cclk::LossKind>(state.range(0));
  const auto b = static_cast<std::size_t>(state.range(1));
  const Matrix u = gaussian(b, 16, 4);
  const Matrix v = gaussian(b, 16, 5);
  const Matrix z = gaussian(b, 3, 6);
  for (auto _ : state) {
    cclk::ad::Tape tape;
    const auto pu = tape.param(u);
    const auto pv = tape.param(v);
    const auto lv = cclk::evaluate_loss(kind, pu, pv, z, cclk::LossConfig{});
    tape.backward(lv.loss);
    benchmark::DoNotOptimize(tape.grad(pu));
  }
  state.SetLabel(std::string(cclk::to_string(kind)));
}
BENCHMARK(BM_LossForwardBackward)
    ->ArgsProduct({{static_cast<int>(cclk::LossKind::InfoNce), static_cast<int>(cclk::LossKind::WeakSupCclk),
                    static_cast<int>(cclk::LossKind::FairCclk), static_cast<int>(cclk::LossKind::HardNegCclk)},
                   {32, 64, 128}});

}  // namespace

BENCHMARK_MAIN();
