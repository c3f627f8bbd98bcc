// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <vector>

#include "cqpm/kernels.hpp"
#include "cqpm/random.hpp"

namespace {

using namespace cqpm;

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform();
  return v;
}

template <bool Parallel>
void BM_fft2(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const std::size_t batch = 32;
  auto re = random_values(batch * side * side, 1);
  std::vector<cd> data(re.begin(), re.end());
  for (auto _ : state) {
    if constexpr (Parallel) kernels::parallel::fft2(data, batch, side, side, false);
    else kernels::serial::fft2(data, batch, side, side, false);
    benchmark::DoNotOptimize(data.data());
  }
}

template <bool Parallel>
void BM_conv2d(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  kernels::ConvShape s{32, 16, 16, side, side, 1};
  const auto x = random_values(s.batch * s.in_ch * side * side, 2);
  const auto w = random_values(s.out_ch * s.in_ch * 9, 3);
  const auto b = random_values(s.out_ch, 4);
  std::vector<double> y(s.batch * s.out_ch * s.out_h() * s.out_w());
  for (auto _ : state) {
    if constexpr (Parallel) kernels::parallel::conv2d_forward(s, x, w, b, y);
    else kernels::serial::conv2d_forward(s, x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void BM_ssim(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  kernels::SsimShape s{32, side, side, 8, 1, 1e-4, 9e-4};
  const auto x = random_values(s.batch * side * side, 5);
  const auto y = random_values(s.batch * side * side, 6);
  const std::vector<double> w(64, 1.0 / 64.0);
  std::vector<double> out(s.batch * s.windows());
  for (auto _ : state) {
    if constexpr (Parallel) kernels::parallel::ssim_map(s, w, x, y, out);
    else kernels::serial::ssim_map(s, w, x, y, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_fft2<false>)->Arg(32)->Arg(256);
BENCHMARK(BM_fft2<true>)->Arg(32)->Arg(256);
BENCHMARK(BM_conv2d<false>)->Arg(32);
BENCHMARK(BM_conv2d<true>)->Arg(32);
BENCHMARK(BM_ssim<false>)->Arg(32)->Arg(128);
BENCHMARK(BM_ssim<true>)->Arg(32)->Arg(128);

BENCHMARK_MAIN();
