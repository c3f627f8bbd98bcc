#include "cqpm/decoder.hpp"

#include <stdexcept>
#include <string>

#include "cqpm/detector.hpp"
#include "cqpm/random.hpp"

namespace cqpm {

DecoderNet::DecoderNet(const DecoderConfig& cfg) : cfg_(cfg), levels_(detector::pool_levels(cfg.compression)) {
  if (cfg.input_side == 0 || cfg.width == 0) throw std::invalid_argument("decoder sides and width must be positive");
  Rng rng(cfg.seed);
  convs_.reserve(levels_ + cfg.low_res_blocks + 2);
  convs_.emplace_back("dec.head", 1, cfg.width, 1, rng);
  for (std::size_t i = 0; i < cfg.low_res_blocks; ++i)
    convs_.emplace_back("dec.body" + std::to_string(i), cfg.width, cfg.width, 1, rng);
  for (std::size_t i = 0; i < levels_; ++i)
    convs_.emplace_back("dec.up" + std::to_string(i), cfg.width, cfg.width, 1, rng);
  convs_.emplace_back("dec.tail", cfg.width, 1, 1, rng);
}

Var DecoderNet::forward(Var c) {
  const auto& s = c.shape();
  if (s.size() != 4 || s[1] != 1 || s[2] != cfg_.input_side || s[3] != cfg_.input_side)
    throw SizeError("decoder expects [N,1," + std::to_string(cfg_.input_side) + "," +
                    std::to_string(cfg_.input_side) + "], got " + shape_str(s));
  std::size_t k = 0;
  Var h = ad::tanh(convs_[k++](c));
  for (std::size_t i = 0; i < cfg_.low_res_blocks; ++i) h = ad::tanh(convs_[k++](h));
  for (std::size_t i = 0; i < levels_; ++i) h = ad::tanh(convs_[k++](ad::upsample2x(h)));
  return ad::sigmoid(convs_[k](h));
}

RealGrid DecoderNet::decode(const RealGrid& compressed) {
  if (compressed.rows != cfg_.input_side || compressed.cols != cfg_.input_side)
    throw SizeError("decoder input side " + std::to_string(compressed.rows) + " does not match configured " +
                    std::to_string(cfg_.input_side));
  Tape tape;
  Var out = forward(tape.constant(Tensor({1, 1, compressed.rows, compressed.cols}, compressed.data)));
  const std::size_t side = output_side();
  return RealGrid(side, side, Role::phase_normalized, out.values());
}

std::vector<Parameter*> DecoderNet::parameters() {
  std::vector<Parameter*> out;
  for (auto& c : convs_) {
    out.push_back(&c.weight);
    out.push_back(&c.bias);
  }
  return out;
}

void DecoderNet::set_trainable(bool trainable) {
  for (Parameter* p : parameters()) p->trainable = trainable;
}

std::size_t DecoderNet::weight_count() {
  std::size_t n = 0;
  for (Parameter* p : parameters()) n += p->size();
  return n;
}

Checkpoint DecoderNet::to_checkpoint() {
  Checkpoint c;
  c.kind = ModelKind::decoder;
  c.grid = static_cast<std::uint32_t>(output_side());
  c.geometry = {static_cast<double>(cfg_.input_side), static_cast<double>(cfg_.compression),
                static_cast<double>(cfg_.width), static_cast<double>(cfg_.low_res_blocks),
                static_cast<double>(cfg_.seed)};
  for (Parameter* p : parameters()) c.add(*p);
  return c;
}

void DecoderNet::load(const Checkpoint& c) {
  if (c.kind != ModelKind::decoder) throw FormatError("checkpoint does not hold a decoder");
  for (Parameter* p : parameters()) c.restore(*p);
}

Discriminator::Discriminator(std::uint64_t seed, std::size_t width) : Discriminator(Rng(seed), width) {}

Discriminator::Discriminator(Rng rng, std::size_t width)
    : width_(width),
      c1_("disc.c1", 1, width, 2, rng),
      c2_("disc.c2", width, width, 2, rng),
      head_("disc.head", width, 1, rng) {}

Var Discriminator::forward(Var img) {
  if (img.shape().size() != 4 || img.shape()[1] != 1)
    throw std::invalid_argument("discriminator expects [N,1,H,W], got " + shape_str(img.shape()));
  Var h = ad::tanh(c1_(img));
  h = ad::tanh(c2_(h));
  return head_(ad::spatial_mean(h));
}

double Discriminator::discriminate(const RealGrid& img) {
  Tape tape;
  return forward(tape.constant(Tensor({1, 1, img.rows, img.cols}, img.data))).values()[0];
}

std::vector<Parameter*> Discriminator::parameters() {
  return {&c1_.weight, &c1_.bias, &c2_.weight, &c2_.bias, &head_.weight, &head_.bias};
}

Checkpoint Discriminator::to_checkpoint() {
  Checkpoint c;
  c.kind = ModelKind::discriminator;
  c.geometry = {static_cast<double>(width_)};
  for (Parameter* p : parameters()) c.add(*p);
  return c;
}

void Discriminator::load(const Checkpoint& c) {
  if (c.kind != ModelKind::discriminator) throw FormatError("checkpoint does not hold a discriminator");
  for (Parameter* p : parameters()) c.restore(*p);
}

const char* encoder_name(EncoderKind k) {
  switch (k) {
    case EncoderKind::linear: return "LE";
    case EncoderKind::nonlinear: return "NLE";
    case EncoderKind::complex_linear: return "CLE";
    case EncoderKind::complex_nonlinear: return "CNLE";
  }
  return "?";
}

const char* decoder_name(DecoderKind k) { return k == DecoderKind::linear ? "LD" : "NLD"; }

Autoencoder::Autoencoder(const AEConfig& cfg) : cfg_(cfg) {
  if (cfg.latent_dim == 0 || cfg.latent_dim > cfg.input_dim)
    throw std::invalid_argument("latent dimension must be in [1, input dimension]");
  Rng rng(cfg.seed);
  const bool deep = cfg.encoder == EncoderKind::nonlinear || cfg.encoder == EncoderKind::complex_nonlinear;
  const std::size_t mid = deep ? cfg.hidden : cfg.latent_dim;
  enc_re_.emplace_back("ae.enc0.re", cfg.input_dim, mid, rng);
  if (deep) enc_re_.emplace_back("ae.enc1.re", cfg.hidden, cfg.latent_dim, rng);
  if (cfg.complex_input()) {
    enc_im_.emplace_back("ae.enc0.im", cfg.input_dim, mid, rng);
    if (deep) enc_im_.emplace_back("ae.enc1.im", cfg.hidden, cfg.latent_dim, rng);
  }
  if (cfg.decoder == DecoderKind::linear) {
    dec_.emplace_back("ae.dec0", cfg.latent_dim, cfg.input_dim, rng);
  } else {
    dec_.emplace_back("ae.dec0", cfg.latent_dim, cfg.hidden, rng);
    dec_.emplace_back("ae.dec1", cfg.hidden, cfg.input_dim, rng);
  }
}

namespace {

// (a + jb) = (Wr + jWi)(xr + jxi) + (br + jbi)
std::pair<Var, Var> complex_dense(nn::Dense& wr, nn::Dense& wi, Var xr, Var xi) {
  Tape& t = *xr.tape;
  Var zero_b = t.constant(Tensor(wr.bias.shape));
  Var Wr = t.param(wr.weight), Wi = t.param(wi.weight);
  Var re = ad::sub(ad::dense(xr, Wr, t.param(wr.bias)), ad::dense(xi, Wi, zero_b));
  Var im = ad::add(ad::dense(xi, Wr, t.param(wi.bias)), ad::dense(xr, Wi, zero_b));
  return {re, im};
}

}  // namespace

Var Autoencoder::encode(Var x) {
  if (x.shape().size() != 2 || x.shape()[1] != cfg_.input_dim)
    throw std::invalid_argument("autoencoder expects [N," + std::to_string(cfg_.input_dim) + "], got " +
                                shape_str(x.shape()));
  if (cfg_.complex_input() != x.is_complex())
    throw std::invalid_argument(std::string("encoder ") + encoder_name(cfg_.encoder) +
                                (cfg_.complex_input() ? " needs a complex field input" : " needs a real input"));
  switch (cfg_.encoder) {
    case EncoderKind::linear: return enc_re_[0](x);
    case EncoderKind::nonlinear: return enc_re_[1](ad::tanh(enc_re_[0](x)));
    case EncoderKind::complex_linear: {
      auto [re, im] = complex_dense(enc_re_[0], enc_im_[0], ad::real_part(x), ad::imag_part(x));
      return ad::modulus(ad::make_complex(re, im));
    }
    case EncoderKind::complex_nonlinear: {
      auto [re, im] = complex_dense(enc_re_[0], enc_im_[0], ad::real_part(x), ad::imag_part(x));
      auto [re2, im2] = complex_dense(enc_re_[1], enc_im_[1], ad::tanh(re), ad::tanh(im));
      return ad::modulus(ad::make_complex(re2, im2));
    }
  }
  throw std::logic_error("unreachable");
}

Var Autoencoder::forward(Var x) {
  Var z = encode(x);
  if (cfg_.decoder == DecoderKind::linear) return dec_[0](z);
  return ad::sigmoid(dec_[1](ad::tanh(dec_[0](z))));
}

std::vector<Parameter*> Autoencoder::parameters() {
  std::vector<Parameter*> out;
  for (auto* layers : {&enc_re_, &enc_im_, &dec_})
    for (auto& d : *layers) {
      out.push_back(&d.weight);
      out.push_back(&d.bias);
    }
  return out;
}

}  // namespace cqpm
