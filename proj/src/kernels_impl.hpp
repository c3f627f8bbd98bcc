#pragma once

// Per-plane building blocks shared by the serial and OpenMP kernels.

#include <cmath>
#include <numbers>
#include <vector>

#include "cqpm/kernels.hpp"

namespace cqpm::kernels::detail {

inline std::size_t log2_exact(std::size_t n) {
  std::size_t k = 0;
  while ((std::size_t{1} << k) < n) ++k;
  return k;
}

// In-place iterative radix-2 transform of a contiguous sequence, scaled by 1/sqrt(n).
inline void fft1d(cd* a, std::size_t n, bool inverse) {
  const std::size_t bits = log2_exact(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b)
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
    if (r > i) std::swap(a[i], a[r]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
      const cd tw(std::cos(ang), std::sin(ang));
      for (std::size_t start = 0; start < n; start += len) {
        const cd u = a[start + k];
        const cd v = a[start + k + half] * tw;
        a[start + k] = u + v;
        a[start + k + half] = u - v;
      }
    }
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) a[i] *= scale;
}

inline void fft_column(cd* plane, std::size_t rows, std::size_t cols, std::size_t c, bool inverse,
                       std::vector<cd>& buf) {
  buf.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) buf[r] = plane[r * cols + c];
  fft1d(buf.data(), rows, inverse);
  for (std::size_t r = 0; r < rows; ++r) plane[r * cols + c] = buf[r];
}

// y[n,o,:,:] for one (n, o) pair.
inline void conv_forward_plane(const ConvShape& s, const double* x, const double* w, double bias,
                               double* y, std::size_t n, std::size_t o) {
  const std::size_t oh = s.out_h(), ow = s.out_w();
  double* yp = y + (n * s.out_ch + o) * oh * ow;
  for (std::size_t i = 0; i < oh * ow; ++i) yp[i] = bias;
  for (std::size_t c = 0; c < s.in_ch; ++c) {
    const double* xp = x + (n * s.in_ch + c) * s.in_h * s.in_w;
    const double* wp = w + (o * s.in_ch + c) * 9;
    for (std::size_t ki = 0; ki < 3; ++ki) {
      for (std::size_t kj = 0; kj < 3; ++kj) {
        const double wv = wp[ki * 3 + kj];
        for (std::size_t i = 0; i < oh; ++i) {
          const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(i * s.stride + ki) - 1;
          if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(s.in_h)) continue;
          const double* xr = xp + ii * s.in_w;
          double* yr = yp + i * ow;
          for (std::size_t j = 0; j < ow; ++j) {
            const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(j * s.stride + kj) - 1;
            if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(s.in_w)) continue;
            yr[j] += wv * xr[jj];
          }
        }
      }
    }
  }
}

// gx[n,c,:,:] for one (n, c) pair.
inline void conv_backward_input_plane(const ConvShape& s, const double* gy, const double* w,
                                      double* gx, std::size_t n, std::size_t c) {
  const std::size_t oh = s.out_h(), ow = s.out_w();
  double* gxp = gx + (n * s.in_ch + c) * s.in_h * s.in_w;
  for (std::size_t o = 0; o < s.out_ch; ++o) {
    const double* gyp = gy + (n * s.out_ch + o) * oh * ow;
    const double* wp = w + (o * s.in_ch + c) * 9;
    for (std::size_t ki = 0; ki < 3; ++ki) {
      for (std::size_t kj = 0; kj < 3; ++kj) {
        const double wv = wp[ki * 3 + kj];
        for (std::size_t i = 0; i < oh; ++i) {
          const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(i * s.stride + ki) - 1;
          if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(s.in_h)) continue;
          double* gxr = gxp + ii * s.in_w;
          const double* gyr = gyp + i * ow;
          for (std::size_t j = 0; j < ow; ++j) {
            const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(j * s.stride + kj) - 1;
            if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(s.in_w)) continue;
            gxr[jj] += wv * gyr[j];
          }
        }
      }
    }
  }
}

// gw[o,:,:,:] and gb[o] for one output channel.
inline void conv_backward_params_channel(const ConvShape& s, const double* x, const double* gy,
                                         double* gw, double* gb, std::size_t o) {
  const std::size_t oh = s.out_h(), ow = s.out_w();
  for (std::size_t n = 0; n < s.batch; ++n) {
    const double* gyp = gy + (n * s.out_ch + o) * oh * ow;
    double bsum = 0.0;
    for (std::size_t i = 0; i < oh * ow; ++i) bsum += gyp[i];
    gb[o] += bsum;
    for (std::size_t c = 0; c < s.in_ch; ++c) {
      const double* xp = x + (n * s.in_ch + c) * s.in_h * s.in_w;
      double* gwp = gw + (o * s.in_ch + c) * 9;
      for (std::size_t ki = 0; ki < 3; ++ki) {
        for (std::size_t kj = 0; kj < 3; ++kj) {
          double acc = 0.0;
          for (std::size_t i = 0; i < oh; ++i) {
            const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(i * s.stride + ki) - 1;
            if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(s.in_h)) continue;
            const double* xr = xp + ii * s.in_w;
            const double* gyr = gyp + i * ow;
            for (std::size_t j = 0; j < ow; ++j) {
              const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(j * s.stride + kj) - 1;
              if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(s.in_w)) continue;
              acc += gyr[j] * xr[jj];
            }
          }
          gwp[ki * 3 + kj] += acc;
        }
      }
    }
  }
}

struct WindowStats {
  double mx, my, vx, vy, cxy;
};

inline WindowStats window_stats(const SsimShape& s, const double* wts, const double* x,
                                const double* y, std::size_t r0, std::size_t c0) {
  double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t a = 0; a < s.window; ++a) {
    for (std::size_t b = 0; b < s.window; ++b) {
      const double w = wts[a * s.window + b];
      const double xv = x[(r0 + a) * s.cols + c0 + b];
      const double yv = y[(r0 + a) * s.cols + c0 + b];
      mx += w * xv;
      my += w * yv;
      sxx += w * xv * xv;
      syy += w * yv * yv;
      sxy += w * xv * yv;
    }
  }
  return {mx, my, sxx - mx * mx, syy - my * my, sxy - mx * my};
}

inline double ssim_value(const WindowStats& st, double c1, double c2) {
  const double a1 = 2.0 * st.mx * st.my + c1;
  const double a2 = 2.0 * st.cxy + c2;
  const double b1 = st.mx * st.mx + st.my * st.my + c1;
  const double b2 = st.vx + st.vy + c2;
  return (a1 * a2) / (b1 * b2);
}

inline void ssim_plane(const SsimShape& s, const double* wts, const double* x, const double* y,
                       double* out) {
  for (std::size_t wr = 0; wr < s.win_rows(); ++wr)
    for (std::size_t wc = 0; wc < s.win_cols(); ++wc)
      out[wr * s.win_cols() + wc] =
          ssim_value(window_stats(s, wts, x, y, wr * s.stride, wc * s.stride), s.c1, s.c2);
}

inline void ssim_backward_plane(const SsimShape& s, const double* wts, const double* x,
                                const double* y, const double* g, double* gx, double* gy) {
  for (std::size_t wr = 0; wr < s.win_rows(); ++wr) {
    for (std::size_t wc = 0; wc < s.win_cols(); ++wc) {
      const double gj = g[wr * s.win_cols() + wc];
      if (gj == 0.0) continue;
      const std::size_t r0 = wr * s.stride, c0 = wc * s.stride;
      const WindowStats st = window_stats(s, wts, x, y, r0, c0);
      const double a1 = 2.0 * st.mx * st.my + s.c1;
      const double a2 = 2.0 * st.cxy + s.c2;
      const double b1 = st.mx * st.mx + st.my * st.my + s.c1;
      const double b2 = st.vx + st.vy + s.c2;
      const double den = b1 * b2;
      const double val = (a1 * a2) / den;
      for (std::size_t a = 0; a < s.window; ++a) {
        for (std::size_t b = 0; b < s.window; ++b) {
          const std::size_t p = (r0 + a) * s.cols + c0 + b;
          const double w = wts[a * s.window + b];
          const double xv = x[p], yv = y[p];
          const double dx = 2.0 * st.my * a2 / den + 2.0 * (yv - st.my) * a1 / den -
                            val * (2.0 * st.mx / b1 + 2.0 * (xv - st.mx) / b2);
          const double dy = 2.0 * st.mx * a2 / den + 2.0 * (xv - st.mx) * a1 / den -
                            val * (2.0 * st.my / b1 + 2.0 * (yv - st.my) / b2);
          gx[p] += gj * w * dx;
          gy[p] += gj * w * dy;
        }
      }
    }
  }
}

}  // namespace cqpm::kernels::detail
