#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cqpm/autodiff.hpp"
#include "cqpm/decoder.hpp"
#include "cqpm/field.hpp"
#include "cqpm/nn.hpp"

namespace cqpm::losses {

enum class WindowWeighting { uniform, gaussian };

struct SSIMParams {
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;  // L
  std::size_t window = 8;
  std::size_t stride = 8;
  WindowWeighting weighting = WindowWeighting::uniform;
  double gaussian_sigma = 1.5;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
  // window x window weights summing to 1.
  std::vector<double> weights() const;

  // 11x11 Gaussian (sigma 1.5), stride 1.
  static SSIMParams gaussian11();
};

struct SsimResult {
  double mean = 0.0;
  RealGrid map;  // one value per window
};

SsimResult ssim(const RealGrid& x, const RealGrid& y, const SSIMParams& p = {});

// mean |a_out_sq - phi / 2pi|.
double phase_recon_loss(const RealGrid& a_out_sq, const RealGrid& phi);

// 10 log10(peak^2 / MSE); +inf when MSE == 0.
double psnr(const RealGrid& x, const RealGrid& y, double peak = 1.0);
// Formats a metric for CSV, writing "inf" for infinite values.
std::string format_metric(double v);

// Tape versions. Images are the trailing two axes; leading axes are a batch.
Var phase_recon_loss(Var intensity, Var phase_normalized);
// Mean SSIM over windows and batch.
Var ssim_mean(Var x, Var y, const SSIMParams& p = {});
Var ssim_loss(Var x, Var y, const SSIMParams& p = {});

// Fixed random convolutional features for the optional perceptual term.
class RandomFeatures {
 public:
  explicit RandomFeatures(std::uint64_t seed, std::size_t width = 8);
  Var features(Var img);

 private:
  nn::Conv3x3 c1_, c2_;
};

struct CompositeWeights {
  double l1 = 1.0;
  double perceptual = 0.0;
  double adversarial = 1e-3;
};

// Non-saturating generator term: mean softplus(-D(fake)).
Var adversarial_generator_loss(Var fake_logits);
// mean softplus(-D(real)) + mean softplus(D(fake)).
Var discriminator_loss(Var real_logits, Var fake_logits);

// w_l1 * L1 + w_perc * L1(features) + w_adv * adversarial. The perceptual
// term is skipped when its weight is zero or no feature network is given.
Var composite_swin_loss(Var phi_hat, Var phi_norm, Discriminator* disc, const CompositeWeights& w,
                        RandomFeatures* perceptual = nullptr);

}  // namespace cqpm::losses
