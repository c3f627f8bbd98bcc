#pragma once

#include <cstdint>
#include <span>

#include "cqpm/autodiff.hpp"
#include "cqpm/field.hpp"
#include "cqpm/random.hpp"

namespace cqpm::detector {

// How gradients pass the stochastic detector.
//   straight_through: noisy output treated as clean signal plus a constant residual.
//   reparameterized:  Gaussian approximation I + s(I)*eps with eps held fixed.
enum class NoiseGradient { straight_through, reparameterized };

struct DetectorConfig {
  std::size_t compression = 16;  // pixel-count ratio, a power of 4
  double max_photon_count = 10000.0;
  double read_noise_sigma = 6.0;
  bool noise_enabled = false;
  std::uint64_t rng_seed = 0;
  NoiseGradient gradient = NoiseGradient::straight_through;

  void validate() const;
  // Number of stacked 2x2 pools, log4(compression).
  std::size_t pool_levels() const;
};

std::size_t pool_levels(std::size_t compression);

RealGrid demagnify(const RealGrid& intensity, std::size_t compression);
// x: [N, H, W] or [N, 1, H, W]; result [N, 1, H/2^k, W/2^k].
Var demagnify(Var x, std::size_t compression);

// Poisson draw: inversion for means up to 1000, rounded normal above.
double sample_poisson(double mean, KeyedStream& stream);

// Per pixel: Poisson(I * count) + N(0, sigma^2), clamped at 0, divided by count.
// Random draws are keyed by (seed, pixel index, key), so results do not depend
// on evaluation order.
RealGrid detect(const RealGrid& intensity, const DetectorConfig& cfg, std::uint64_t key = 0);
// x: [N, ...]; sample n draws with key sample_keys[n].
Var detect(Var x, const DetectorConfig& cfg, std::span<const std::uint64_t> sample_keys);

}  // namespace cqpm::detector
