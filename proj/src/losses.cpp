#include "cqpm/losses.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "cqpm/kernels.hpp"

namespace cqpm::losses {

namespace {

kernels::SsimShape ssim_shape(std::size_t batch, std::size_t rows, std::size_t cols, const SSIMParams& p) {
  if (p.window == 0 || p.stride == 0) throw std::invalid_argument("SSIM window and stride must be positive");
  if (rows < p.window || cols < p.window)
    throw SizeError("SSIM window " + std::to_string(p.window) + " larger than image " + std::to_string(rows) + "x" +
                    std::to_string(cols));
  return {batch, rows, cols, p.window, p.stride, p.c1(), p.c2()};
}

}  // namespace

std::vector<double> SSIMParams::weights() const {
  std::vector<double> w(window * window, 1.0);
  if (weighting == WindowWeighting::gaussian) {
    const double c = (static_cast<double>(window) - 1.0) / 2.0;
    for (std::size_t a = 0; a < window; ++a)
      for (std::size_t b = 0; b < window; ++b) {
        const double da = static_cast<double>(a) - c, db = static_cast<double>(b) - c;
        w[a * window + b] = std::exp(-(da * da + db * db) / (2.0 * gaussian_sigma * gaussian_sigma));
      }
  }
  double s = 0.0;
  for (double v : w) s += v;
  for (auto& v : w) v /= s;
  return w;
}

SSIMParams SSIMParams::gaussian11() {
  SSIMParams p;
  p.window = 11;
  p.stride = 1;
  p.weighting = WindowWeighting::gaussian;
  return p;
}

SsimResult ssim(const RealGrid& x, const RealGrid& y, const SSIMParams& p) {
  if (x.rows != y.rows || x.cols != y.cols) throw SizeError("ssim: grids differ in shape");
  const auto s = ssim_shape(1, x.rows, x.cols, p);
  SsimResult r;
  r.map = RealGrid(s.win_rows(), s.win_cols(), Role::raw);
  kernels::ssim_map(s, p.weights(), x.data, y.data, r.map.data);
  double acc = 0.0;
  for (double v : r.map.data) acc += v;
  r.mean = acc / static_cast<double>(r.map.size());
  return r;
}

double phase_recon_loss(const RealGrid& a_out_sq, const RealGrid& phi) {
  if (a_out_sq.rows != phi.rows || a_out_sq.cols != phi.cols)
    throw SizeError("phase_recon_loss: grids differ in shape");
  double acc = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i)
    acc += std::abs(a_out_sq.data[i] - phi.data[i] / (2.0 * std::numbers::pi));
  return acc / static_cast<double>(phi.size());
}

double psnr(const RealGrid& x, const RealGrid& y, double peak) {
  if (x.size() != y.size()) throw SizeError("psnr: grids differ in size");
  double mse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mse += (x.data[i] - y.data[i]) * (x.data[i] - y.data[i]);
  mse /= static_cast<double>(x.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

Var phase_recon_loss(Var intensity, Var phase_normalized) { return ad::l1_loss(intensity, phase_normalized); }

Var ssim_mean(Var x, Var y, const SSIMParams& p) {
  if (x.shape() != y.shape()) throw SizeError("ssim: shapes differ");
  const auto& sh = x.shape();
  if (sh.size() < 2) throw std::invalid_argument("ssim expects at least 2 axes");
  const std::size_t rows = sh[sh.size() - 2], cols = sh[sh.size() - 1];
  const auto s = ssim_shape(x.size() / (rows * cols), rows, cols, p);
  const std::vector<double> w = p.weights();
  std::vector<double> map(s.batch * s.windows());
  kernels::ssim_map(s, w, x.values(), y.values(), map);
  double acc = 0.0;
  for (double v : map) acc += v;
  const double count = static_cast<double>(map.size());
  const std::size_t ix = x.id, iy = y.id;
  return x.tape->push({1}, std::vector<double>{acc / count}, {x, y}, [=](Tape& t, std::size_t self) {
    std::vector<double> g(s.batch * s.windows(), t.node(self).rg[0] / count);
    std::vector<double> gx(t.node(ix).rv.size(), 0.0), gy(gx.size(), 0.0);
    kernels::ssim_backward(s, w, t.node(ix).rv, t.node(iy).rv, g, gx, gy);
    if (t.wants(ix)) {
      auto dst = t.rgrad(ix);
      for (std::size_t i = 0; i < gx.size(); ++i) dst[i] += gx[i];
    }
    if (t.wants(iy)) {
      auto dst = t.rgrad(iy);
      for (std::size_t i = 0; i < gy.size(); ++i) dst[i] += gy[i];
    }
  });
}

Var ssim_loss(Var x, Var y, const SSIMParams& p) { return ad::scale(ssim_mean(x, y, p), -1.0); }

RandomFeatures::RandomFeatures(std::uint64_t seed, std::size_t width)
    : c1_("perc.c1", 1, width, 1, *std::make_unique<Rng>(seed)),
      c2_("perc.c2", width, width, 2, *std::make_unique<Rng>(seed + 1)) {
  for (Parameter* p : {&c1_.weight, &c1_.bias, &c2_.weight, &c2_.bias}) p->trainable = false;
}

Var RandomFeatures::features(Var img) { return ad::tanh(c2_(ad::tanh(c1_(img)))); }

Var adversarial_generator_loss(Var fake_logits) { return ad::mean(ad::softplus(ad::scale(fake_logits, -1.0))); }

Var discriminator_loss(Var real_logits, Var fake_logits) {
  return ad::add(ad::mean(ad::softplus(ad::scale(real_logits, -1.0))), ad::mean(ad::softplus(fake_logits)));
}

Var composite_swin_loss(Var phi_hat, Var phi_norm, Discriminator* disc, const CompositeWeights& w,
                        RandomFeatures* perceptual) {
  Var total = ad::scale(ad::l1_loss(phi_hat, phi_norm), w.l1);
  if (w.perceptual != 0.0 && perceptual) {
    Var term = ad::l1_loss(perceptual->features(phi_hat), perceptual->features(phi_norm));
    total = ad::add(total, ad::scale(term, w.perceptual));
  }
  if (w.adversarial != 0.0 && disc) {
    Var term = adversarial_generator_loss(disc->forward(phi_hat));
    total = ad::add(total, ad::scale(term, w.adversarial));
  }
  return total;
}

}  // namespace cqpm::losses
