#include "cqpm/kernels.hpp"

#include <atomic>

namespace cqpm::kernels {

namespace {
std::atomic<Execution> g_mode{Execution::parallel};
bool par() { return g_mode.load(std::memory_order_relaxed) == Execution::parallel; }
}  // namespace

void set_execution(Execution mode) { g_mode.store(mode); }
Execution execution() { return g_mode.load(); }

void fft2(std::span<cd> data, std::size_t batch, std::size_t rows, std::size_t cols, bool inverse) {
  par() ? parallel::fft2(data, batch, rows, cols, inverse) : serial::fft2(data, batch, rows, cols, inverse);
}

void cmul_broadcast(std::span<cd> z, std::span<const cd> f, std::size_t batch, bool conjugate) {
  par() ? parallel::cmul_broadcast(z, f, batch, conjugate) : serial::cmul_broadcast(z, f, batch, conjugate);
}

void conv2d_forward(const ConvShape& s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y) {
  par() ? parallel::conv2d_forward(s, x, w, b, y) : serial::conv2d_forward(s, x, w, b, y);
}

void conv2d_backward_input(const ConvShape& s, std::span<const double> gy, std::span<const double> w,
                           std::span<double> gx) {
  par() ? parallel::conv2d_backward_input(s, gy, w, gx) : serial::conv2d_backward_input(s, gy, w, gx);
}

void conv2d_backward_params(const ConvShape& s, std::span<const double> x, std::span<const double> gy,
                            std::span<double> gw, std::span<double> gb) {
  par() ? parallel::conv2d_backward_params(s, x, gy, gw, gb)
        : serial::conv2d_backward_params(s, x, gy, gw, gb);
}

void ssim_map(const SsimShape& s, std::span<const double> weights, std::span<const double> x,
              std::span<const double> y, std::span<double> out) {
  par() ? parallel::ssim_map(s, weights, x, y, out) : serial::ssim_map(s, weights, x, y, out);
}

void ssim_backward(const SsimShape& s, std::span<const double> weights, std::span<const double> x,
                   std::span<const double> y, std::span<const double> g, std::span<double> gx,
                   std::span<double> gy) {
  par() ? parallel::ssim_backward(s, weights, x, y, g, gx, gy)
        : serial::ssim_backward(s, weights, x, y, g, gx, gy);
}

}  // namespace cqpm::kernels
