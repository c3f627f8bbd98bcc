#include <doctest.h>

#include <sstream>

#include "cqpm/decoder.hpp"
#include "cqpm/gradcheck_suite.hpp"
#include "cqpm/random.hpp"

using namespace cqpm;

TEST_CASE("decoder output shape and range") {
  DecoderNet dec(DecoderConfig{4, 16, 8, 1, 3});
  CHECK(dec.levels() == 2);
  CHECK(dec.output_side() == 16);
  Rng rng(1);
  RealGrid in(4, 4, Role::intensity);
  for (double& v : in.data) v = rng.uniform(0, 3);
  const RealGrid out = dec.decode(in);
  CHECK(out.rows == 16);
  CHECK(out.cols == 16);
  for (double v : out.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(dec.decode(RealGrid(8, 8, Role::intensity)), SizeError);
}

TEST_CASE("decoder gradients") {
  for (const auto& c : run_gradcheck_suite("decoder")) {
    INFO(c.name);
    CHECK(c.report.passed());
  }
}

TEST_CASE("decoder weight count and checkpoint") {
  DecoderNet a(DecoderConfig{8, 16, 16, 1, 5});
  // head 1->16, body 16->16, two upsample convs 16->16, tail 16->1.
  const std::size_t expect = (9 * 16 + 16) + 3 * (9 * 256 + 16) + (9 * 16 + 1);
  CHECK(a.weight_count() == expect);
  DecoderNet b(DecoderConfig{8, 16, 16, 1, 99});
  b.load(a.to_checkpoint());
  RealGrid in(8, 8, Role::intensity, 0.3);
  CHECK(a.decode(in).data == b.decode(in).data);
  DecoderNet c(DecoderConfig{8, 16, 8, 1, 5});
  CHECK_THROWS(c.load(a.to_checkpoint()));
}

TEST_CASE("frozen decoder receives no gradient") {
  DecoderNet dec(DecoderConfig{4, 4, 4, 0, 1});
  dec.set_trainable(false);
  Tape t;
  t.backward(ad::sum(dec.forward(t.constant(Tensor({1, 1, 4, 4}, std::vector<double>(16, 0.5))))));
  for (Parameter* p : dec.parameters())
    for (double g : p->grad) CHECK(g == 0.0);
}

TEST_CASE("discriminator produces one logit per image") {
  Discriminator d(4);
  Tape t;
  Var out = d.forward(t.constant(Tensor({3, 1, 16, 16}, std::vector<double>(768, 0.2))));
  CHECK(out.shape() == Shape{3, 1});
  CHECK(std::isfinite(d.discriminate(RealGrid(16, 16, Role::phase_normalized, 0.4))));
}

TEST_CASE("autoencoder domains") {
  Autoencoder real(AEConfig{EncoderKind::linear, DecoderKind::nonlinear, 8, 2, 6, 1});
  Autoencoder cplx(AEConfig{EncoderKind::complex_linear, DecoderKind::nonlinear, 8, 2, 6, 1});
  Tape t;
  Var xr = t.constant(Tensor({2, 8}, std::vector<double>(16, 0.5)));
  Var xc = t.constant(CTensor({2, 8}, std::vector<cd>(16, cd(0, 1))));
  CHECK(real.forward(xr).shape() == Shape{2, 8});
  CHECK(cplx.forward(xc).shape() == Shape{2, 8});
  CHECK_THROWS(real.forward(xc));
  CHECK_THROWS(cplx.forward(xr));
  // The complex encoder's latent is a detected intensity, so it is non-negative.
  for (double v : cplx.encode(xc).values()) CHECK(v >= 0.0);
  CHECK_THROWS(Autoencoder(AEConfig{EncoderKind::linear, DecoderKind::linear, 4, 5, 4, 1}));
  CHECK(std::string(encoder_name(EncoderKind::complex_nonlinear)) == "CNLE");
  CHECK(std::string(decoder_name(DecoderKind::linear)) == "LD");
}
