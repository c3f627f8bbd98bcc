#include "kernels_impl.hpp"

namespace cqpm::kernels::serial {

void fft2(std::span<cd> data, std::size_t batch, std::size_t rows, std::size_t cols, bool inverse) {
  std::vector<cd> buf;
  for (std::size_t n = 0; n < batch; ++n) {
    cd* plane = data.data() + n * rows * cols;
    for (std::size_t r = 0; r < rows; ++r) detail::fft1d(plane + r * cols, cols, inverse);
    for (std::size_t c = 0; c < cols; ++c) detail::fft_column(plane, rows, cols, c, inverse, buf);
  }
}

void cmul_broadcast(std::span<cd> z, std::span<const cd> f, std::size_t batch, bool conjugate) {
  const std::size_t plane = f.size();
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t i = 0; i < plane; ++i)
      z[n * plane + i] *= conjugate ? std::conj(f[i]) : f[i];
}

void conv2d_forward(const ConvShape& s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y) {
  for (std::size_t n = 0; n < s.batch; ++n)
    for (std::size_t o = 0; o < s.out_ch; ++o)
      detail::conv_forward_plane(s, x.data(), w.data(), b[o], y.data(), n, o);
}

void conv2d_backward_input(const ConvShape& s, std::span<const double> gy, std::span<const double> w,
                           std::span<double> gx) {
  for (std::size_t n = 0; n < s.batch; ++n)
    for (std::size_t c = 0; c < s.in_ch; ++c)
      detail::conv_backward_input_plane(s, gy.data(), w.data(), gx.data(), n, c);
}

void conv2d_backward_params(const ConvShape& s, std::span<const double> x, std::span<const double> gy,
                            std::span<double> gw, std::span<double> gb) {
  for (std::size_t o = 0; o < s.out_ch; ++o)
    detail::conv_backward_params_channel(s, x.data(), gy.data(), gw.data(), gb.data(), o);
}

void ssim_map(const SsimShape& s, std::span<const double> weights, std::span<const double> x,
              std::span<const double> y, std::span<double> out) {
  const std::size_t plane = s.rows * s.cols;
  for (std::size_t n = 0; n < s.batch; ++n)
    detail::ssim_plane(s, weights.data(), x.data() + n * plane, y.data() + n * plane,
                       out.data() + n * s.windows());
}

void ssim_backward(const SsimShape& s, std::span<const double> weights, std::span<const double> x,
                   std::span<const double> y, std::span<const double> g, std::span<double> gx,
                   std::span<double> gy) {
  const std::size_t plane = s.rows * s.cols;
  for (std::size_t n = 0; n < s.batch; ++n)
    detail::ssim_backward_plane(s, weights.data(), x.data() + n * plane, y.data() + n * plane,
                                g.data() + n * s.windows(), gx.data() + n * plane,
                                gy.data() + n * plane);
}

}  // namespace cqpm::kernels::serial
