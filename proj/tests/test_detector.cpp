#include <doctest.h>

#include <cstring>

#include "cqpm/detector.hpp"
#include "cqpm/gradcheck_suite.hpp"
#include "cqpm/random.hpp"
#include "oracles.hpp"

using namespace cqpm;
using namespace cqpm::detector;

namespace {

RealGrid ramp(std::size_t n) {
  RealGrid g(n, n, Role::intensity);
  for (std::size_t i = 0; i < g.size(); ++i) g.data[i] = static_cast<double>(i % 7) / 7.0;
  return g;
}

struct Moments {
  double mean = 0, var = 0;
};

Moments moments(double intensity, const DetectorConfig& cfg, std::size_t samples) {
  RealGrid g(1, samples, Role::intensity, intensity);
  const RealGrid y = detect(g, cfg, 1);
  Moments m;
  for (double v : y.data) m.mean += v;
  m.mean /= static_cast<double>(samples);
  for (double v : y.data) m.var += (v - m.mean) * (v - m.mean);
  m.var /= static_cast<double>(samples - 1);
  return m;
}

}  // namespace

TEST_CASE("pool levels from the compression factor") {
  CHECK(pool_levels(1) == 0);
  CHECK(pool_levels(4) == 1);
  CHECK(pool_levels(16) == 2);
  CHECK(pool_levels(64) == 3);
  CHECK_THROWS(pool_levels(8));
  CHECK_THROWS(pool_levels(0));
}

TEST_CASE("demagnify is block averaging") {
  const RealGrid g = ramp(16);
  const RealGrid d = demagnify(g, 16);
  CHECK(d.rows == 4);
  const auto expect = oracle::block_mean(g.data, 16, 16, 4);
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(d.data[i] == doctest::Approx(expect[i]).epsilon(1e-15));
  CHECK(d.mean() == doctest::Approx(g.mean()));
  CHECK_THROWS(demagnify(RealGrid(6, 6, Role::intensity), 16));
  CHECK(demagnify(g, 1).data == g.data);

  Tape t;
  Var v = demagnify(t.constant(Tensor({1, 16, 16}, g.data)), 16);
  CHECK(v.shape() == Shape{1, 1, 4, 4});
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(v.values()[i] == doctest::Approx(expect[i]).epsilon(1e-15));
}

TEST_CASE("gradients through demagnify and noise-free detect") {
  for (const auto& c : run_gradcheck_suite("detector")) {
    INFO(c.name);
    CHECK(c.report.passed());
  }
}

TEST_CASE("noise disabled returns the input unchanged") {
  DetectorConfig cfg;
  const RealGrid g = ramp(8);
  CHECK(detect(g, cfg).data == g.data);
  CHECK_THROWS(detect(RealGrid(1, 1, Role::intensity, -0.1), cfg));
}

TEST_CASE("noisy detection is keyed and reproducible") {
  DetectorConfig cfg;
  cfg.noise_enabled = true;
  cfg.rng_seed = 5;
  const RealGrid g = ramp(8);
  const RealGrid a = detect(g, cfg, 3), b = detect(g, cfg, 3), c = detect(g, cfg, 4);
  CHECK(std::memcmp(a.data.data(), b.data.data(), a.size() * sizeof(double)) == 0);
  CHECK(a.data != c.data);
  for (double v : a.data) CHECK(v >= 0.0);
}

TEST_CASE("noise moments follow Poisson plus Gaussian read noise") {
  for (auto [count, sigma, intensity] : {std::tuple{100.0, 4.0, 0.5}, std::tuple{10000.0, 6.0, 0.3},
                                         std::tuple{600.0, 2.0, 0.8}}) {
    DetectorConfig cfg;
    cfg.noise_enabled = true;
    cfg.max_photon_count = count;
    cfg.read_noise_sigma = sigma;
    const Moments m = moments(intensity, cfg, 20000);
    const double var = (intensity * count + sigma * sigma) / (count * count);
    CHECK(m.mean == doctest::Approx(intensity).epsilon(0.01));
    CHECK(m.var == doctest::Approx(var).epsilon(0.05));
  }
}

TEST_CASE("poisson sampler across the inversion/normal switch") {
  for (double mean : {0.0, 0.3, 7.0, 499.0, 501.0, 999.0, 1500.0}) {
    double s = 0, s2 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      KeyedStream ks(3, static_cast<std::uint64_t>(i), 0);
      const double v = sample_poisson(mean, ks);
      CHECK(v == std::floor(v));
      s += v;
      s2 += v * v;
    }
    const double m = s / n, var = s2 / n - m * m;
    if (mean == 0.0) {
      CHECK(m == 0.0);
      continue;
    }
    CHECK(m == doctest::Approx(mean).epsilon(std::max(0.02, 4 / std::sqrt(mean * n))));
    CHECK(var == doctest::Approx(mean).epsilon(0.06));
  }
}

TEST_CASE("noise gradient modes") {
  DetectorConfig cfg;
  cfg.noise_enabled = true;
  cfg.max_photon_count = 100;
  cfg.read_noise_sigma = 4;
  const std::uint64_t key = 9;
  Parameter p("i", {1, 2, 2});
  p.value = {0.5, 0.2, 0.0, 0.9};

  Tape t1;
  t1.backward(ad::sum(detect(t1.param(p), cfg, std::span(&key, 1))));
  const auto y = [&] {
    Tape t;
    return detect(t.constant(Tensor({1, 2, 2}, p.value)), cfg, std::span(&key, 1)).values();
  }();
  for (std::size_t i = 0; i < 4; ++i) CHECK(p.grad[i] == (y[i] > 0.0 ? 1.0 : 0.0));

  cfg.gradient = NoiseGradient::reparameterized;
  p.zero_grad();
  Tape t2;
  t2.backward(ad::sum(detect(t2.param(p), cfg, std::span(&key, 1))));
  const double v0 = p.value[0] * 100 + 16;
  const double eps = (y[0] - p.value[0]) / (std::sqrt(v0) / 100);
  CHECK(p.grad[0] == doctest::Approx(1 + eps / (2 * std::sqrt(v0))));
}

TEST_CASE("invalid detector configs") {
  DetectorConfig cfg;
  cfg.compression = 8;
  CHECK_THROWS(cfg.validate());
  cfg.compression = 16;
  cfg.max_photon_count = 0;
  CHECK_THROWS(cfg.validate());
  cfg.max_photon_count = 10;
  cfg.read_noise_sigma = -1;
  CHECK_THROWS(cfg.validate());
}
