#pragma once

#include <cstdint>
#include <vector>

#include "cqpm/autodiff.hpp"
#include "cqpm/checkpoint.hpp"
#include "cqpm/field.hpp"
#include "cqpm/nn.hpp"

namespace cqpm {

// Electronic reconstruction network: conv+tanh blocks with nearest-neighbour
// 2x upsampling, undoing a compression of 4^levels, sigmoid output in [0, 1].
struct DecoderConfig {
  std::size_t input_side = 8;
  std::size_t compression = 16;
  std::size_t width = 16;
  std::size_t low_res_blocks = 1;  // extra conv blocks before the first upsample
  std::uint64_t seed = 1;
};

class DecoderNet {
 public:
  explicit DecoderNet(const DecoderConfig& cfg);

  const DecoderConfig& config() const { return cfg_; }
  std::size_t levels() const { return levels_; }
  std::size_t output_side() const { return cfg_.input_side << levels_; }

  // [N, 1, s, s] -> [N, 1, s*2^k, s*2^k].
  Var forward(Var c);
  RealGrid decode(const RealGrid& compressed);

  std::vector<Parameter*> parameters();
  void set_trainable(bool trainable);
  std::size_t weight_count();

  Checkpoint to_checkpoint();
  void load(const Checkpoint& c);

 private:
  DecoderConfig cfg_;
  std::size_t levels_;
  std::vector<nn::Conv3x3> convs_;
};

// Strided-conv classifier producing one logit per image.
class Discriminator {
 public:
  explicit Discriminator(std::uint64_t seed, std::size_t width = 8);

  // [N, 1, H, W] -> [N, 1] logits.
  Var forward(Var img);
  double discriminate(const RealGrid& img);

  std::vector<Parameter*> parameters();
  Checkpoint to_checkpoint();
  void load(const Checkpoint& c);

 private:
  Discriminator(Rng rng, std::size_t width);
  std::size_t width_;
  nn::Conv3x3 c1_, c2_;
  nn::Dense head_;
};

enum class EncoderKind { linear, nonlinear, complex_linear, complex_nonlinear };
enum class DecoderKind { linear, nonlinear };

const char* encoder_name(EncoderKind k);
const char* decoder_name(DecoderKind k);

struct AEConfig {
  EncoderKind encoder = EncoderKind::linear;
  DecoderKind decoder = DecoderKind::nonlinear;
  std::size_t input_dim = 64;
  std::size_t latent_dim = 4;
  std::size_t hidden = 64;
  std::uint64_t seed = 1;

  bool complex_input() const {
    return encoder == EncoderKind::complex_linear || encoder == EncoderKind::complex_nonlinear;
  }
};

// Dense autoencoder. Complex encoders read a complex [N, D] field and hand the
// latent's squared modulus to the decoder, mirroring intensity detection.
class Autoencoder {
 public:
  explicit Autoencoder(const AEConfig& cfg);

  const AEConfig& config() const { return cfg_; }
  Var encode(Var x);
  Var forward(Var x);

  std::vector<Parameter*> parameters();

 private:
  AEConfig cfg_;
  std::vector<nn::Dense> enc_re_, enc_im_, dec_;
};

}  // namespace cqpm
