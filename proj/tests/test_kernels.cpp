#include <doctest.h>

#include <cstring>
#include <vector>

#include "cqpm/kernels.hpp"
#include "cqpm/random.hpp"
#include "oracles.hpp"

using namespace cqpm;

namespace {

std::vector<double> rand_vec(std::size_t n, std::uint64_t seed, double lo = -1, double hi = 1) {
  Rng r(seed);
  std::vector<double> v(n);
  for (double& x : v) x = r.uniform(lo, hi);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("parallel fft2 is bit-identical to the serial reference") {
  const auto re = rand_vec(6 * 16 * 32, 1), im = rand_vec(6 * 16 * 32, 2);
  std::vector<cd> a(re.size()), b;
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = cd(re[i], im[i]);
  b = a;
  kernels::serial::fft2(a, 6, 16, 32, false);
  kernels::parallel::fft2(b, 6, 16, 32, false);
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(cd)) == 0);
}

TEST_CASE("conv2d kernels agree and match a direct sum") {
  kernels::ConvShape s{2, 3, 4, 7, 6, 2};
  const auto x = rand_vec(2 * 3 * 7 * 6, 3), w = rand_vec(4 * 3 * 9, 4), b = rand_vec(4, 5);
  std::vector<double> ys(2 * 4 * s.out_h() * s.out_w()), yp(ys.size());
  kernels::serial::conv2d_forward(s, x, w, b, ys);
  kernels::parallel::conv2d_forward(s, x, w, b, yp);
  CHECK(same_bits(ys, yp));
  // Direct evaluation of one output.
  const std::size_t n = 1, o = 2, oy = 2, ox = 1;
  double acc = b[o];
  for (std::size_t c = 0; c < 3; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const long iy = static_cast<long>(oy * 2) + ky - 1, ix = static_cast<long>(ox * 2) + kx - 1;
        if (iy < 0 || ix < 0 || iy >= 7 || ix >= 6) continue;
        acc += w[((o * 3 + c) * 3 + ky) * 3 + kx] * x[((n * 3 + c) * 7 + iy) * 6 + ix];
      }
  CHECK(ys[((n * 4 + o) * s.out_h() + oy) * s.out_w() + ox] == doctest::Approx(acc).epsilon(1e-14));

  const auto gy = rand_vec(ys.size(), 6);
  std::vector<double> gxs(x.size()), gxp(x.size()), gws(w.size()), gwp(w.size()), gbs(4), gbp(4);
  kernels::serial::conv2d_backward_input(s, gy, w, gxs);
  kernels::parallel::conv2d_backward_input(s, gy, w, gxp);
  kernels::serial::conv2d_backward_params(s, x, gy, gws, gbs);
  kernels::parallel::conv2d_backward_params(s, x, gy, gwp, gbp);
  CHECK(same_bits(gxs, gxp));
  CHECK(same_bits(gws, gwp));
  CHECK(same_bits(gbs, gbp));
}

TEST_CASE("ssim kernels agree and match the windowed oracle") {
  kernels::SsimShape s{3, 16, 16, 8, 4, 1e-4, 9e-4};
  const auto x = rand_vec(3 * 256, 7, 0, 1), y = rand_vec(3 * 256, 8, 0, 1);
  const std::vector<double> w(64, 1.0 / 64);
  std::vector<double> ms(3 * s.windows()), mp(ms.size());
  kernels::serial::ssim_map(s, w, x, y, ms);
  kernels::parallel::ssim_map(s, w, x, y, mp);
  CHECK(same_bits(ms, mp));
  const std::vector<double> x1(x.begin() + 256, x.begin() + 512), y1(y.begin() + 256, y.begin() + 512);
  CHECK(ms[s.windows() + 1 * s.win_cols() + 2] ==
        doctest::Approx(oracle::window_ssim(x1, y1, 16, 4, 8, 8, 1e-4, 9e-4)).epsilon(1e-12));
  const auto g = rand_vec(ms.size(), 9);
  std::vector<double> gxs(x.size()), gys(x.size()), gxp(x.size()), gyp(x.size());
  kernels::serial::ssim_backward(s, w, x, y, g, gxs, gys);
  kernels::parallel::ssim_backward(s, w, x, y, g, gxp, gyp);
  CHECK(same_bits(gxs, gxp));
  CHECK(same_bits(gys, gyp));
}

TEST_CASE("execution mode switch") {
  const auto before = kernels::execution();
  kernels::set_execution(kernels::Execution::serial);
  CHECK(kernels::execution() == kernels::Execution::serial);
  kernels::set_execution(before);
}
