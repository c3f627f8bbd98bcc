#include <doctest.h>

#include <cmath>
#include <limits>

#include "cqpm/gradcheck_suite.hpp"
#include "cqpm/losses.hpp"
#include "cqpm/random.hpp"
#include "oracles.hpp"

using namespace cqpm;
using namespace cqpm::losses;

namespace {

RealGrid random_grid(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  RealGrid g(n, n, Role::phase_normalized);
  for (double& v : g.data) v = rng.uniform();
  return g;
}

}  // namespace

TEST_CASE("SSIM constants") {
  SSIMParams p;
  CHECK(p.c1() == doctest::Approx(1e-4));
  CHECK(p.c2() == doctest::Approx(9e-4));
}

TEST_CASE("ssim(x, x) is exactly one") {
  for (std::uint64_t s : {1u, 2u, 3u}) {
    const RealGrid x = random_grid(32, s);
    CHECK(ssim(x, x).mean == 1.0);
    CHECK(ssim(x, x, SSIMParams::gaussian11()).mean == 1.0);
  }
}

TEST_CASE("ssim is symmetric") {
  const RealGrid x = random_grid(32, 4), y = random_grid(32, 5);
  CHECK(std::abs(ssim(x, y).mean - ssim(y, x).mean) < 1e-12);
}

TEST_CASE("ssim agrees with the brute-force windowed oracle") {
  const RealGrid x = random_grid(32, 6), y = random_grid(32, 7);
  const auto r = ssim(x, y);
  CHECK(r.map.rows == 4);
  CHECK(std::abs(r.mean - oracle::mean_ssim(x.data, y.data, 32, 32, 8, 8, 1e-4, 9e-4)) < 1e-10);
  SSIMParams p;
  p.window = 7;
  p.stride = 3;
  CHECK(std::abs(ssim(x, y, p).mean - oracle::mean_ssim(x.data, y.data, 32, 32, 7, 3, 1e-4, 9e-4)) < 1e-10);
}

TEST_CASE("constant grids follow the analytic formula") {
  const double a = 0.3, b = 0.7, c1 = 1e-4;
  const RealGrid x(16, 16, Role::phase_normalized, a), y(16, 16, Role::phase_normalized, b);
  // Zero variances leave the luminance term times c2/c2.
  const double expect = (2 * a * b + c1) / (a * a + b * b + c1);
  CHECK(std::abs(ssim(x, y).mean - expect) < 1e-10);
}

TEST_CASE("gaussian window weights") {
  const auto w = SSIMParams::gaussian11().weights();
  CHECK(w.size() == 121);
  double s = 0;
  for (double v : w) s += v;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(w[60] > w[0]);
}

TEST_CASE("ssim rejects mismatched or undersized grids") {
  CHECK_THROWS(ssim(random_grid(16, 1), random_grid(32, 1)));
  CHECK_THROWS(ssim(random_grid(4, 1), random_grid(4, 1)));
}

TEST_CASE("PSNR") {
  const RealGrid x = random_grid(8, 1);
  CHECK(psnr(x, x) == std::numeric_limits<double>::infinity());
  CHECK(format_metric(psnr(x, x)) == "inf");
  RealGrid y = x;
  for (double& v : y.data) v += 0.1;
  CHECK(psnr(x, y) == doctest::Approx(20.0));
}

TEST_CASE("phase reconstruction loss normalizes the phase") {
  const double pi2 = 2 * std::numbers::pi;
  RealGrid phi(1, 2, Role::phase, std::vector<double>{pi2 * 0.5, pi2 * 0.25});
  RealGrid i(1, 2, Role::intensity, std::vector<double>{0.5, 0.5});
  CHECK(phase_recon_loss(i, phi) == doctest::Approx(0.125));
  Tape t;
  CHECK(losses::phase_recon_loss(t.constant(Tensor({1, 2}, i.data)), t.constant(Tensor({1, 2}, {0.5, 0.25}))).item() ==
        doctest::Approx(0.125));
}

TEST_CASE("tape SSIM matches the grid SSIM") {
  const RealGrid x = random_grid(16, 8), y = random_grid(16, 9);
  Tape t;
  Var s = ssim_mean(t.constant(Tensor({1, 1, 16, 16}, x.data)), t.constant(Tensor({1, 1, 16, 16}, y.data)));
  CHECK(s.item() == doctest::Approx(ssim(x, y).mean).epsilon(1e-14));
}

TEST_CASE("loss gradients pass central differences") {
  for (const auto& c : run_gradcheck_suite("losses")) {
    INFO(c.name);
    CHECK(c.report.passed());
    CHECK(c.report.max_rel_error() < 1e-4);
  }
}

TEST_CASE("composite loss terms") {
  Tape t;
  Var a = t.constant(Tensor({1, 1, 8, 8}, std::vector<double>(64, 0.6)));
  Var b = t.constant(Tensor({1, 1, 8, 8}, std::vector<double>(64, 0.4)));
  CompositeWeights only_l1{1.0, 0.0, 0.0};
  CHECK(composite_swin_loss(a, b, nullptr, only_l1).item() == doctest::Approx(0.2));
  Discriminator d(3, 4);
  CompositeWeights adv{0.0, 0.0, 1.0};
  const double logit = d.forward(a).values()[0];
  CHECK(composite_swin_loss(a, b, &d, adv).item() == doctest::Approx(std::log1p(std::exp(-logit))));
  RandomFeatures feats(2);
  CompositeWeights perc{0.0, 1.0, 0.0};
  CHECK(composite_swin_loss(a, b, nullptr, perc, &feats).item() > 0.0);
  CHECK(composite_swin_loss(a, a, nullptr, perc, &feats).item() == 0.0);
}
