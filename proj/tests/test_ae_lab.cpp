#include <doctest.h>

#include <sstream>
#include <string>

#include "cqpm/ae_lab.hpp"
#include "cqpm/random.hpp"

using namespace cqpm;
using namespace cqpm::ae;

namespace {

Samples uniform_samples(std::size_t count, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Samples s{count, dim, {}};
  for (std::size_t i = 0; i < count * dim; ++i) s.values.push_back(rng.uniform(0.2, 0.8));
  return s;
}

}  // namespace

TEST_CASE("no bottleneck: every configuration reconstructs") {
  const Samples train = uniform_samples(32, 3, 1), test = uniform_samples(8, 3, 2);
  for (const AEConfig& c : study_configs(3, 3, 16, 5)) {
    Autoencoder m(c);
    const auto r = fit(m, train, test, 5000, 32, 3e-3, 3);
    const std::string name = std::string(encoder_name(c.encoder)) + "+" + decoder_name(c.decoder);
    INFO(name, " train mse ", r.train_mse);
    CHECK(r.train_mse < 1e-4);
    if (c.encoder == EncoderKind::linear && c.decoder == DecoderKind::linear) CHECK(r.train_mse < 1e-8);
  }
}

TEST_CASE("rank-limited data is exact for the linear pair") {
  // x = mean + U z with a rank-2 U in 12 dimensions.
  Rng rng(4);
  const std::size_t dim = 12, rank = 2;
  std::vector<double> u(dim * rank), mean(dim);
  for (double& v : u) v = rng.uniform(-0.2, 0.2);
  for (double& v : mean) v = rng.uniform(0.3, 0.7);
  auto make = [&](std::size_t n) {
    Samples s{n, dim, {}};
    for (std::size_t i = 0; i < n; ++i) {
      const double z0 = rng.uniform(-1, 1), z1 = rng.uniform(-1, 1);
      for (std::size_t d = 0; d < dim; ++d) s.values.push_back(mean[d] + u[d * 2] * z0 + u[d * 2 + 1] * z1);
    }
    return s;
  };
  const Samples train = make(64), test = make(16);
  Autoencoder m(AEConfig{EncoderKind::linear, DecoderKind::linear, dim, rank, 8, 7});
  const auto r = fit(m, train, test, 8000, 64, 3e-3, 1);
  CHECK(r.train_mse < 1e-6);
  CHECK(r.test_mse < 1e-6);
}

TEST_CASE("toy digits study: linear encoders on par") {
  StudyConfig cfg;
  const auto rep = run_ae_study(cfg);
  REQUIRE(rep.rows.size() == 5);
  std::ostringstream os;
  rep.write_csv(os);
  MESSAGE(os.str());
  CHECK(rep.on_par("LE+NLD", "NLE+NLD", 4));
  CHECK(rep.on_par("CLE+NLD", "CNLE+NLD", 4));
  for (const auto& r : rep.rows) CHECK(r.order_checksum == rep.rows[0].order_checksum);
  CHECK(os.str().substr(0, os.str().find('\n')) == "config,latent_dim,train_mse,test_mse,wall_time");
}

TEST_CASE("study results are reproducible") {
  StudyConfig cfg;
  cfg.train_count = 64;
  cfg.test_count = 16;
  cfg.epochs = 5;
  const auto a = run_ae_study(cfg), b = run_ae_study(cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].config == b.rows[i].config);
    CHECK(a.rows[i].train_mse == b.rows[i].train_mse);
    CHECK(a.rows[i].test_mse == b.rows[i].test_mse);
  }
}
