#include <omp.h>

#include "kernels_impl.hpp"

namespace cqpm::kernels::parallel {

namespace {
using idx = std::ptrdiff_t;
}

void fft2(std::span<cd> data, std::size_t batch, std::size_t rows, std::size_t cols, bool inverse) {
  const idx total_rows = static_cast<idx>(batch * rows);
#pragma omp parallel for schedule(static)
  for (idx r = 0; r < total_rows; ++r)
    detail::fft1d(data.data() + static_cast<std::size_t>(r) * cols, cols, inverse);

  const idx total_cols = static_cast<idx>(batch * cols);
#pragma omp parallel
  {
    std::vector<cd> buf;
#pragma omp for schedule(static)
    for (idx k = 0; k < total_cols; ++k) {
      const std::size_t n = static_cast<std::size_t>(k) / cols;
      const std::size_t c = static_cast<std::size_t>(k) % cols;
      detail::fft_column(data.data() + n * rows * cols, rows, cols, c, inverse, buf);
    }
  }
}

void cmul_broadcast(std::span<cd> z, std::span<const cd> f, std::size_t batch, bool conjugate) {
  const std::size_t plane = f.size();
  const idx total = static_cast<idx>(batch * plane);
#pragma omp parallel for schedule(static)
  for (idx k = 0; k < total; ++k) {
    const std::size_t i = static_cast<std::size_t>(k) % plane;
    z[static_cast<std::size_t>(k)] *= conjugate ? std::conj(f[i]) : f[i];
  }
}

void conv2d_forward(const ConvShape& s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y) {
  const idx total = static_cast<idx>(s.batch * s.out_ch);
#pragma omp parallel for schedule(static)
  for (idx k = 0; k < total; ++k) {
    const std::size_t n = static_cast<std::size_t>(k) / s.out_ch;
    const std::size_t o = static_cast<std::size_t>(k) % s.out_ch;
    detail::conv_forward_plane(s, x.data(), w.data(), b[o], y.data(), n, o);
  }
}

void conv2d_backward_input(const ConvShape& s, std::span<const double> gy, std::span<const double> w,
                           std::span<double> gx) {
  const idx total = static_cast<idx>(s.batch * s.in_ch);
#pragma omp parallel for schedule(static)
  for (idx k = 0; k < total; ++k) {
    const std::size_t n = static_cast<std::size_t>(k) / s.in_ch;
    const std::size_t c = static_cast<std::size_t>(k) % s.in_ch;
    detail::conv_backward_input_plane(s, gy.data(), w.data(), gx.data(), n, c);
  }
}

void conv2d_backward_params(const ConvShape& s, std::span<const double> x, std::span<const double> gy,
                            std::span<double> gw, std::span<double> gb) {
  const idx total = static_cast<idx>(s.out_ch);
#pragma omp parallel for schedule(static)
  for (idx o = 0; o < total; ++o)
    detail::conv_backward_params_channel(s, x.data(), gy.data(), gw.data(), gb.data(),
                                         static_cast<std::size_t>(o));
}

void ssim_map(const SsimShape& s, std::span<const double> weights, std::span<const double> x,
              std::span<const double> y, std::span<double> out) {
  const std::size_t plane = s.rows * s.cols;
  const idx total = static_cast<idx>(s.batch);
#pragma omp parallel for schedule(static)
  for (idx k = 0; k < total; ++k) {
    const auto n = static_cast<std::size_t>(k);
    detail::ssim_plane(s, weights.data(), x.data() + n * plane, y.data() + n * plane,
                       out.data() + n * s.windows());
  }
}

void ssim_backward(const SsimShape& s, std::span<const double> weights, std::span<const double> x,
                   std::span<const double> y, std::span<const double> g, std::span<double> gx,
                   std::span<double> gy) {
  const std::size_t plane = s.rows * s.cols;
  const idx total = static_cast<idx>(s.batch);
#pragma omp parallel for schedule(static)
  for (idx k = 0; k < total; ++k) {
    const auto n = static_cast<std::size_t>(k);
    detail::ssim_backward_plane(s, weights.data(), x.data() + n * plane, y.data() + n * plane,
                                g.data() + n * s.windows(), gx.data() + n * plane,
                                gy.data() + n * plane);
  }
}

}  // namespace cqpm::kernels::parallel
