#pragma once

// Independent reference computations used by the tests. Written directly from
// the defining formulas, sharing no code with the library kernels.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

using cd = std::complex<double>;

// Direct O(N^2) 2-D DFT with 1/sqrt(HW) scaling.
inline std::vector<cd> dft2(const std::vector<cd>& x, std::size_t rows, std::size_t cols, bool inverse) {
  std::vector<cd> out(rows * cols);
  const double sign = inverse ? 1.0 : -1.0;
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows * cols));
  for (std::size_t u = 0; u < rows; ++u)
    for (std::size_t v = 0; v < cols; ++v) {
      cd acc = 0.0;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
          const double ang = sign * 2.0 * std::numbers::pi *
                             (static_cast<double>(u * r) / static_cast<double>(rows) +
                              static_cast<double>(v * c) / static_cast<double>(cols));
          acc += x[r * cols + c] * cd(std::cos(ang), std::sin(ang));
        }
      out[u * cols + v] = acc * scale;
    }
  return out;
}

// Signed frequency index of FFT bin k.
inline double freq_index(std::size_t k, std::size_t n) {
  return k < (n + 1) / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
}

// Mean of each 2^k x 2^k block.
inline std::vector<double> block_mean(const std::vector<double>& x, std::size_t rows, std::size_t cols,
                                      std::size_t block) {
  std::vector<double> out((rows / block) * (cols / block), 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[(r / block) * (cols / block) + c / block] += x[r * cols + c];
  for (double& v : out) v /= static_cast<double>(block * block);
  return out;
}

// SSIM of one window with uniform weights, two-pass statistics.
inline double window_ssim(const std::vector<double>& x, const std::vector<double>& y, std::size_t cols,
                          std::size_t r0, std::size_t c0, std::size_t win, double c1, double c2) {
  const double n = static_cast<double>(win * win);
  double mx = 0, my = 0;
  for (std::size_t r = r0; r < r0 + win; ++r)
    for (std::size_t c = c0; c < c0 + win; ++c) {
      mx += x[r * cols + c];
      my += y[r * cols + c];
    }
  mx /= n;
  my /= n;
  double vx = 0, vy = 0, cxy = 0;
  for (std::size_t r = r0; r < r0 + win; ++r)
    for (std::size_t c = c0; c < c0 + win; ++c) {
      const double dx = x[r * cols + c] - mx, dy = y[r * cols + c] - my;
      vx += dx * dx;
      vy += dy * dy;
      cxy += dx * dy;
    }
  vx /= n;
  vy /= n;
  cxy /= n;
  return ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
}

inline double mean_ssim(const std::vector<double>& x, const std::vector<double>& y, std::size_t rows,
                        std::size_t cols, std::size_t win, std::size_t stride, double c1, double c2) {
  double acc = 0;
  std::size_t count = 0;
  for (std::size_t r = 0; r + win <= rows; r += stride)
    for (std::size_t c = 0; c + win <= cols; c += stride) {
      acc += window_ssim(x, y, cols, r, c, win, c1, c2);
      ++count;
    }
  return acc / static_cast<double>(count);
}

}  // namespace oracle
