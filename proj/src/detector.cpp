#include "cqpm/detector.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cqpm::detector {

namespace {

constexpr double kInversionLimit = 1000.0;
constexpr double kInversionChunk = 500.0;

double poisson_inversion(double mean, KeyedStream& stream) {
  const double u = stream.uniform();
  double p = std::exp(-mean);
  double cdf = p;
  double k = 0.0;
  while (u > cdf && k < 10.0 * mean + 100.0) {
    k += 1.0;
    p *= mean / k;
    cdf += p;
  }
  return k;
}

struct Draw {
  double value;    // clamped, normalized
  double raw;      // unclamped, normalized
};

Draw noisy_pixel(double clean, const DetectorConfig& cfg, std::uint64_t pixel, std::uint64_t key) {
  KeyedStream stream(cfg.rng_seed, pixel, key);
  const double photons = sample_poisson(clean * cfg.max_photon_count, stream);
  const double read = cfg.read_noise_sigma > 0.0 ? cfg.read_noise_sigma * stream.normal() : 0.0;
  const double raw = (photons + read) / cfg.max_photon_count;
  return {std::max(0.0, raw), raw};
}

}  // namespace

std::size_t pool_levels(std::size_t compression) {
  std::size_t k = 0, c = 1;
  while (c < compression) {
    c *= 4;
    ++k;
  }
  if (c != compression || compression == 0)
    throw std::invalid_argument("compression " + std::to_string(compression) + " is not a power of 4");
  return k;
}

void DetectorConfig::validate() const {
  detector::pool_levels(compression);
  if (!(max_photon_count > 0.0)) throw std::invalid_argument("max_photon_count must be positive");
  if (!(read_noise_sigma >= 0.0)) throw std::invalid_argument("read_noise_sigma must be non-negative");
}

std::size_t DetectorConfig::pool_levels() const { return detector::pool_levels(compression); }

RealGrid demagnify(const RealGrid& in, std::size_t compression) {
  const std::size_t k = pool_levels(compression);
  const std::size_t f = std::size_t{1} << k;
  if (in.rows % f || in.cols % f)
    throw SizeError("grid " + std::to_string(in.rows) + "x" + std::to_string(in.cols) +
                    " is not divisible by demagnification side factor " + std::to_string(f));
  RealGrid cur = in;
  for (std::size_t level = 0; level < k; ++level) {
    RealGrid next(cur.rows / 2, cur.cols / 2, in.role);
    for (std::size_t i = 0; i < next.rows; ++i)
      for (std::size_t j = 0; j < next.cols; ++j)
        next.at(i, j) = 0.25 * (cur.at(2 * i, 2 * j) + cur.at(2 * i, 2 * j + 1) + cur.at(2 * i + 1, 2 * j) +
                                cur.at(2 * i + 1, 2 * j + 1));
    cur = std::move(next);
  }
  return cur;
}

Var demagnify(Var x, std::size_t compression) {
  const std::size_t k = pool_levels(compression);
  Shape s = x.shape();
  if (s.size() == 3) {
    x = ad::reshape(x, {s[0], 1, s[1], s[2]});
  } else if (s.size() != 4 || s[1] != 1) {
    throw std::invalid_argument("demagnify expects [N,H,W] or [N,1,H,W], got " + shape_str(s));
  }
  const std::size_t f = std::size_t{1} << k;
  if (x.shape()[2] % f || x.shape()[3] % f)
    throw SizeError("intensity " + shape_str(x.shape()) + " is not divisible by side factor " + std::to_string(f));
  for (std::size_t level = 0; level < k; ++level) x = ad::avgpool2x2(x);
  return x;
}

double sample_poisson(double mean, KeyedStream& stream) {
  if (mean <= 0.0) return 0.0;
  if (mean > kInversionLimit) return std::max(0.0, std::round(mean + std::sqrt(mean) * stream.normal()));
  // Split large means so exp(-mean) stays well inside double range.
  double total = 0.0, rest = mean;
  while (rest > kInversionChunk) {
    total += poisson_inversion(kInversionChunk, stream);
    rest -= kInversionChunk;
  }
  return total + poisson_inversion(rest, stream);
}

RealGrid detect(const RealGrid& in, const DetectorConfig& cfg, std::uint64_t key) {
  cfg.validate();
  for (double v : in.data)
    if (v < 0.0) throw std::invalid_argument("detector input intensity must be non-negative");
  if (!cfg.noise_enabled) return in;
  RealGrid out(in.rows, in.cols, Role::intensity);
  for (std::size_t i = 0; i < in.size(); ++i) out.data[i] = noisy_pixel(in.data[i], cfg, i, key).value;
  return out;
}

Var detect(Var x, const DetectorConfig& cfg, std::span<const std::uint64_t> sample_keys) {
  cfg.validate();
  const auto& xv = x.values();
  for (double v : xv)
    if (v < 0.0) throw std::invalid_argument("detector input intensity must be non-negative");
  if (!cfg.noise_enabled) return x;
  const std::size_t batch = x.shape()[0];
  if (sample_keys.size() != batch) throw std::invalid_argument("detect needs one key per sample");
  const std::size_t plane = x.size() / batch;
  std::vector<double> y(xv.size()), slope(xv.size());
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t i = 0; i < plane; ++i) {
      const std::size_t k = n * plane + i;
      const Draw d = noisy_pixel(xv[k], cfg, i, sample_keys[n]);
      y[k] = d.value;
      if (d.raw < 0.0) {
        slope[k] = 0.0;
      } else if (cfg.gradient == NoiseGradient::straight_through) {
        slope[k] = 1.0;
      } else {
        const double n_ph = cfg.max_photon_count;
        const double var_ph = xv[k] * n_ph + cfg.read_noise_sigma * cfg.read_noise_sigma;
        if (var_ph <= 0.0) {
          slope[k] = 1.0;
        } else {
          const double s = std::sqrt(var_ph) / n_ph;
          const double eps = (d.raw - xv[k]) / s;
          slope[k] = 1.0 + eps / (2.0 * std::sqrt(var_ph));
        }
      }
    }
  const std::size_t ix = x.id;
  return x.tape->push(x.shape(), std::move(y), {x}, [ix, slope = std::move(slope)](Tape& t, std::size_t self) {
    if (!t.wants(ix)) return;
    const auto& g = t.node(self).rg;
    auto gx = t.rgrad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * slope[i];
  });
}

}  // namespace cqpm::detector
