#pragma once

// Data-parallel inner loops. Every kernel exists twice: a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::parallel`. Both run the
// same per-plane arithmetic in the same order, so their outputs are
// bit-identical; the parallel variant only distributes independent planes or
// windows across threads. The unqualified `kernels::` entry points dispatch on
// the process-wide execution mode.

#include <cstddef>
#include <span>

#include "cqpm/tensor.hpp"

namespace cqpm::kernels {

enum class Execution { serial, parallel };

void set_execution(Execution mode);
Execution execution();

// 3x3 convolution, zero padding 1, configurable stride.
struct ConvShape {
  std::size_t batch = 1;
  std::size_t in_ch = 1;
  std::size_t out_ch = 1;
  std::size_t in_h = 1;
  std::size_t in_w = 1;
  std::size_t stride = 1;

  std::size_t out_h() const { return (in_h - 1) / stride + 1; }
  std::size_t out_w() const { return (in_w - 1) / stride + 1; }
};

// Weighted-window SSIM layout over a stack of `batch` images.
struct SsimShape {
  std::size_t batch = 1;
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::size_t window = 8;
  std::size_t stride = 8;
  double c1 = 1e-4;
  double c2 = 9e-4;

  std::size_t win_rows() const { return (rows - window) / stride + 1; }
  std::size_t win_cols() const { return (cols - window) / stride + 1; }
  std::size_t windows() const { return win_rows() * win_cols(); }
};

#define CQPM_KERNEL_DECLS                                                                          \
  /* Unitary 2-D DFT over the trailing (rows, cols) axes of `batch` planes. */                     \
  void fft2(std::span<cd> data, std::size_t batch, std::size_t rows, std::size_t cols,            \
            bool inverse);                                                                         \
  /* z[n] *= f (or conj(f)) for every plane n. */                                                  \
  void cmul_broadcast(std::span<cd> z, std::span<const cd> f, std::size_t batch, bool conjugate); \
  void conv2d_forward(const ConvShape& s, std::span<const double> x, std::span<const double> w,   \
                      std::span<const double> b, std::span<double> y);                            \
  /* Accumulates into gx. */                                                                       \
  void conv2d_backward_input(const ConvShape& s, std::span<const double> gy,                      \
                             std::span<const double> w, std::span<double> gx);                    \
  /* Accumulates into gw and gb. */                                                                \
  void conv2d_backward_params(const ConvShape& s, std::span<const double> x,                      \
                              std::span<const double> gy, std::span<double> gw,                   \
                              std::span<double> gb);                                               \
  /* Per-window SSIM values, layout [batch][win_rows][win_cols]. */                                \
  void ssim_map(const SsimShape& s, std::span<const double> weights, std::span<const double> x,    \
                std::span<const double> y, std::span<double> out);                                \
  /* Accumulates d(sum_j g_j * ssim_j)/dx and /dy. */                                              \
  void ssim_backward(const SsimShape& s, std::span<const double> weights,                         \
                     std::span<const double> x, std::span<const double> y,                        \
                     std::span<const double> g, std::span<double> gx, std::span<double> gy);

namespace serial {
CQPM_KERNEL_DECLS
}
namespace parallel {
CQPM_KERNEL_DECLS
}
CQPM_KERNEL_DECLS

#undef CQPM_KERNEL_DECLS

}  // namespace cqpm::kernels
