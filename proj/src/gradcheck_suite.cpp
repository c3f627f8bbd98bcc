#include "cqpm/gradcheck_suite.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cqpm/decoder.hpp"
#include "cqpm/detector.hpp"
#include "cqpm/losses.hpp"
#include "cqpm/optics.hpp"
#include "cqpm/random.hpp"

namespace cqpm {

namespace {

constexpr std::size_t kSide = 16;

Parameter random_param(const std::string& name, Shape shape, Rng& rng, double lo, double hi) {
  Parameter p(name, std::move(shape));
  for (double& v : p.value) v = rng.uniform(lo, hi);
  return p;
}

Tensor random_tensor(Shape shape, Rng& rng, double lo, double hi) {
  std::vector<double> v(numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v));
}

CTensor random_phase_field(Shape shape, Rng& rng) {
  std::vector<cd> v(numel(shape));
  for (cd& z : v) z = std::polar(rng.uniform(0.5, 1.0), rng.uniform(0.0, 2.0 * std::numbers::pi));
  return CTensor(std::move(shape), std::move(v));
}

// Smooth scalar read-out: sum(x * w) with fixed random weights.
Var weighted_sum(Var x, const Tensor& w) { return ad::sum(ad::mul(x, x.tape->constant(w))); }

// Target and prediction pairs kept at least `margin` apart so |a - b| stays
// differentiable under the finite-difference step.
void separated(Rng& rng, Parameter& pred, Tensor& target, double margin) {
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double t = rng.uniform(0.2, 0.8);
    target.data[i] = t;
    pred.value[i] = t + (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(margin, 0.15);
  }
}

void add(std::vector<SuiteCase>& out, const std::string& module, const std::string& name, const LossBuilder& f,
         std::vector<Parameter*> params, std::size_t max_coords = 0) {
  out.push_back({module, name, finite_difference_check(f, params, 1e-5, 1e-4, max_coords)});
}

void autodiff_suite(std::vector<SuiteCase>& out, Rng& rng) {
  const std::string m = "autodiff";
  Parameter a = random_param("a", {2, 3, 4}, rng, -1, 1);
  Parameter b = random_param("b", {2, 3, 4}, rng, 0.5, 1.5);
  const Tensor w = random_tensor({2, 3, 4}, rng, -1, 1);
  add(out, m, "elementwise", [&](Tape& t) {
    Var x = t.param(a), y = t.param(b);
    Var r = ad::add(ad::mul(ad::tanh(x), ad::exp(ad::scale(y, 0.3))), ad::sigmoid(ad::sub(x, y)));
    r = ad::add(r, ad::softplus(ad::add_const(x, 0.2)));
    return weighted_sum(r, w);
  }, {&a, &b});
  Parameter s = random_param("s", {1}, rng, 0.5, 1.5);
  add(out, m, "mul_scalar+mean+mse", [&](Tape& t) {
    Var x = ad::mul_scalar(t.param(a), t.param(s));
    return ad::add(ad::mean(x), ad::mse_loss(x, t.param(b)));
  }, {&a, &b, &s});

  Parameter x = random_param("x", {2, 2, 8, 8}, rng, -1, 1);
  Parameter cw = random_param("w", {3, 2, 3, 3}, rng, -0.5, 0.5);
  Parameter cb = random_param("b", {3}, rng, -0.1, 0.1);
  const Tensor w1 = random_tensor({2, 3, 8, 8}, rng, -1, 1);
  const Tensor w2 = random_tensor({2, 3, 4, 4}, rng, -1, 1);
  const Tensor w3 = random_tensor({2, 3, 8, 8}, rng, -1, 1);
  const Tensor w4 = random_tensor({2, 3}, rng, -1, 1);
  add(out, m, "conv2d", [&](Tape& t) { return weighted_sum(ad::conv2d(t.param(x), t.param(cw), t.param(cb), 1), w1); },
      {&x, &cw, &cb});
  add(out, m, "conv2d_stride2", [&](Tape& t) {
    return weighted_sum(ad::conv2d(t.param(x), t.param(cw), t.param(cb), 2), w2);
  }, {&x, &cw, &cb});
  add(out, m, "upsample+avgpool+spatial_mean", [&](Tape& t) {
    Var c = ad::conv2d(t.param(x), t.param(cw), t.param(cb), 2);
    Var u = ad::avgpool2x2(ad::upsample2x(ad::upsample2x(c)));
    return ad::add(weighted_sum(u, w3), weighted_sum(ad::spatial_mean(u), w4));
  }, {&x, &cw, &cb});

  Parameter dx = random_param("x", {3, 5}, rng, -1, 1);
  Parameter dw = random_param("w", {4, 5}, rng, -1, 1);
  Parameter db = random_param("b", {4}, rng, -1, 1);
  const Tensor dwt = random_tensor({3, 4}, rng, -1, 1);
  add(out, m, "dense", [&](Tape& t) { return weighted_sum(ad::dense(t.param(dx), t.param(dw), t.param(db)), dwt); },
      {&dx, &dw, &db});

  Parameter re = random_param("re", {2, 8, 8}, rng, -1, 1);
  Parameter im = random_param("im", {2, 8, 8}, rng, -1, 1);
  Parameter ph = random_param("phase", {8, 8}, rng, 0, 6);
  Parameter fre = random_param("f.re", {8, 8}, rng, -1, 1);
  Parameter fim = random_param("f.im", {8, 8}, rng, -1, 1);
  const Tensor wi = random_tensor({2, 8, 8}, rng, -1, 1);
  const CTensor cc = random_phase_field({8, 8}, rng);
  add(out, m, "complex_chain", [&](Tape& t) {
    Var z = ad::make_complex(t.param(re), t.param(im));
    z = ad::phase_modulate(z, t.param(ph));
    z = ad::fft2(z, false);
    z = ad::cmul(z, ad::make_complex(t.param(fre), t.param(fim)));
    z = ad::cmul_const(ad::fft2(z, true), cc);
    z = ad::cscale(z, ad::exp(t.param(s)));
    return ad::add(weighted_sum(ad::intensity(z), wi),
                   ad::add(weighted_sum(ad::real_part(z), wi), weighted_sum(ad::imag_part(z), wi)));
  }, {&re, &im, &ph, &fre, &fim, &s});
  add(out, m, "modulus", [&](Tape& t) {
    return weighted_sum(ad::modulus(ad::make_complex(t.param(re), t.param(im))), wi);
  }, {&re, &im});
}

void optics_suite(std::vector<SuiteCase>& out, Rng& rng) {
  const std::string m = "optics";
  const CTensor input = random_phase_field({2, kSide, kSide}, rng);
  const Tensor w = random_tensor({2, kSide, kSide}, rng, -1, 1);
  auto lff = optics::OpticalModel::make_lff(kSide, kSide / 2, 316.4e-9, 632.8e-9, rng.next());
  add(out, m, "lff_forward", [&](Tape& t) { return weighted_sum(lff.forward_intensity(t.constant(input)), w); },
      lff.parameters(), 64);

  auto d2nn = optics::OpticalModel::make_d2nn(kSide, 2, optics::scaled_geometry(kSide));
  for (std::size_t k = 0; k < 2; ++k) {
    for (double& v : d2nn.layer(k).phase.value) v = rng.uniform(0.0, 2.0 * std::numbers::pi);
    d2nn.power_raw(k).value[0] = rng.uniform(-0.3, 0.3);
  }
  add(out, m, "d2nn_forward", [&](Tape& t) { return weighted_sum(d2nn.forward_intensity(t.constant(input)), w); },
      d2nn.parameters(), 64);
  add(out, m, "d2nn_forward_layer1", [&](Tape& t) {
    return weighted_sum(d2nn.forward_intensity(t.constant(input), 1), w);
  }, d2nn.parameters(), 64);

  Parameter re = random_param("re", {2, kSide, kSide}, rng, -1, 1);
  Parameter im = random_param("im", {2, kSide, kSide}, rng, -1, 1);
  add(out, m, "propagate", [&](Tape& t) {
    Var z = optics::propagate(ad::make_complex(t.param(re), t.param(im)), 316.4e-9, 632.8e-9, 3.373e-6);
    return weighted_sum(ad::intensity(z), w);
  }, {&re, &im}, 64);
}

void detector_suite(std::vector<SuiteCase>& out, Rng& rng) {
  const std::string m = "detector";
  Parameter x = random_param("intensity", {2, kSide, kSide}, rng, 0.1, 1.0);
  const Tensor w = random_tensor({2, 1, kSide / 4, kSide / 4}, rng, -1, 1);
  add(out, m, "demagnify", [&](Tape& t) { return weighted_sum(detector::demagnify(t.param(x), 16), w); }, {&x});
  detector::DetectorConfig off;
  const std::uint64_t keys[2] = {1, 2};
  add(out, m, "detect_noise_off", [&](Tape& t) {
    return weighted_sum(detector::detect(detector::demagnify(t.param(x), 16), off, keys), w);
  }, {&x});
}

void losses_suite(std::vector<SuiteCase>& out, Rng& rng) {
  const std::string m = "losses";
  Parameter a = random_param("intensity", {2, kSide, kSide}, rng, 0, 1);
  Tensor target = random_tensor({2, kSide, kSide}, rng, 0, 1);
  separated(rng, a, target, 0.02);
  add(out, m, "phase_recon_loss", [&](Tape& t) {
    return losses::phase_recon_loss(t.param(a), t.constant(target));
  }, {&a});

  Parameter x = random_param("x", {2, 1, kSide, kSide}, rng, 0, 1);
  Parameter y = random_param("y", {2, 1, kSide, kSide}, rng, 0, 1);
  add(out, m, "ssim_loss", [&](Tape& t) { return losses::ssim_loss(t.param(x), t.param(y)); }, {&x, &y});
  losses::SSIMParams strided;
  strided.window = 4;
  strided.stride = 2;
  add(out, m, "ssim_loss_overlapping", [&](Tape& t) { return losses::ssim_loss(t.param(x), t.param(y), strided); },
      {&x, &y});
  losses::SSIMParams gauss = losses::SSIMParams::gaussian11();
  add(out, m, "ssim_loss_gaussian", [&](Tape& t) { return losses::ssim_loss(t.param(x), t.param(y), gauss); },
      {&x, &y}, 128);

  Parameter phi_hat = random_param("phi_hat", {2, 1, kSide, kSide}, rng, 0, 1);
  Tensor phi = random_tensor({2, 1, kSide, kSide}, rng, 0, 1);
  separated(rng, phi_hat, phi, 0.02);
  Discriminator disc(rng.next(), 4);
  losses::CompositeWeights cw{1.0, 0.0, 0.5};
  auto params = disc.parameters();
  params.insert(params.begin(), &phi_hat);
  add(out, m, "composite_swin_loss", [&](Tape& t) {
    return losses::composite_swin_loss(t.param(phi_hat), t.constant(phi), &disc, cw);
  }, params, 96);
  add(out, m, "discriminator_loss", [&](Tape& t) {
    return losses::discriminator_loss(disc.forward(t.constant(phi)), disc.forward(t.param(phi_hat)));
  }, params, 96);
}

void decoder_suite(std::vector<SuiteCase>& out, Rng& rng) {
  const std::string m = "decoder";
  DecoderNet dec(DecoderConfig{4, 16, 4, 1, rng.next()});
  Parameter in = random_param("input", {2, 1, 4, 4}, rng, 0, 1);
  const Tensor w = random_tensor({2, 1, kSide, kSide}, rng, -1, 1);
  auto params = dec.parameters();
  params.insert(params.begin(), &in);
  add(out, m, "decode", [&](Tape& t) { return weighted_sum(dec.forward(t.param(in)), w); }, params, 96);

  Discriminator disc(rng.next(), 4);
  Parameter img = random_param("image", {2, 1, kSide, kSide}, rng, 0, 1);
  const Tensor wl = random_tensor({2, 1}, rng, -1, 1);
  auto dparams = disc.parameters();
  dparams.insert(dparams.begin(), &img);
  add(out, m, "discriminate", [&](Tape& t) { return weighted_sum(disc.forward(t.param(img)), wl); }, dparams, 96);

  for (const auto& [enc, decn] : {std::pair{EncoderKind::nonlinear, DecoderKind::nonlinear},
                                  std::pair{EncoderKind::complex_nonlinear, DecoderKind::linear}}) {
    Autoencoder ae(AEConfig{enc, decn, 6, 3, 5, rng.next()});
    const Tensor wa = random_tensor({2, 6}, rng, -1, 1);
    const Tensor xr = random_tensor({2, 6}, rng, 0, 1);
    const CTensor xc = random_phase_field({2, 6}, rng);
    const bool cplx = ae.config().complex_input();
    add(out, m, std::string("autoencoder_") + encoder_name(enc) + "+" + decoder_name(decn), [&](Tape& t) {
      return weighted_sum(ae.forward(cplx ? t.constant(xc) : t.constant(xr)), wa);
    }, ae.parameters());
  }
}

}  // namespace

std::vector<std::string> gradcheck_modules() { return {"autodiff", "optics", "detector", "losses", "decoder"}; }

std::vector<SuiteCase> run_gradcheck_suite(const std::string& module, std::uint64_t seed) {
  std::vector<SuiteCase> out;
  Rng rng(seed);
  bool any = false;
  auto want = [&](const char* m) {
    const bool w = module == "all" || module == m;
    any = any || w;
    return w;
  };
  if (want("autodiff")) autodiff_suite(out, rng);
  if (want("optics")) optics_suite(out, rng);
  if (want("detector")) detector_suite(out, rng);
  if (want("losses")) losses_suite(out, rng);
  if (want("decoder")) decoder_suite(out, rng);
  if (!any) throw std::invalid_argument("unknown gradcheck module '" + module + "'");
  return out;
}

}  // namespace cqpm
