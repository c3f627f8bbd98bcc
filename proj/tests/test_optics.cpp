#include <doctest.h>

#include <cstring>
#include <sstream>

#include "cqpm/optics.hpp"
#include "cqpm/random.hpp"
#include "oracles.hpp"

using namespace cqpm;
using namespace cqpm::optics;

namespace {

constexpr double kLambda = 632.8e-9, kPitch = 316.4e-9, kD = 3.373e-6;

ComplexField random_field(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  ComplexField f(n, n, kPitch, kLambda);
  for (cd& z : f.data()) z = cd(rng.uniform(-1, 1), rng.uniform(-1, 1));
  return f;
}

// Transfer function written from its definition, per frequency pair.
cd h_oracle(double fy, double fx, double d) {
  const double arg = 1.0 / (kLambda * kLambda) - fx * fx - fy * fy;
  if (arg < 0) return 0.0;
  return std::polar(1.0, 2 * std::numbers::pi * d * std::sqrt(arg));
}

std::vector<cd> propagate_oracle(const ComplexField& f, double d) {
  const std::size_t n = f.rows();
  auto spec = oracle::dft2(f.data(), n, n, false);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const double fy = oracle::freq_index(r, n) / (static_cast<double>(n) * kPitch);
      const double fx = oracle::freq_index(c, n) / (static_cast<double>(n) * kPitch);
      spec[r * n + c] *= h_oracle(fy, fx, d);
    }
  return oracle::dft2(spec, n, n, true);
}

double max_diff(const std::vector<cd>& a, const std::vector<cd>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("full-scale geometry constants") {
  const Geometry g = full_geometry();
  CHECK(g.wavelength == 632.8e-9);
  CHECK(g.pitch == 316.4e-9);
  CHECK(g.input_distance == 3.373e-6);
  CHECK(g.layer_distance == 3.373e-6);
  CHECK(g.detector_distance == 5.904e-6);
  const Geometry s = scaled_geometry(32);
  CHECK(s.layer_distance == doctest::Approx(3.373e-6 / 8));
  CHECK(s.pitch == g.pitch);
}

TEST_CASE("angular spectrum propagation matches the DFT oracle") {
  const auto f = random_field(16, 3);
  const auto out = angular_spectrum_propagate(f, kD);
  CHECK(max_diff(out.data(), propagate_oracle(f, kD)) < 1e-10);
}

TEST_CASE("transfer function: DC phase and evanescent cut") {
  const auto h = transfer_function(16, 16, kPitch, kLambda, kD);
  CHECK(std::abs(h.data[0] - std::polar(1.0, 2 * std::numbers::pi * kD / kLambda)) < 1e-12);
  // At pitch lambda/2 the Nyquist corner is evanescent.
  CHECK(h.data[8 * 16 + 8] == cd(0, 0));
  for (const cd& z : h.data) CHECK((std::abs(z) == 0.0 || std::abs(std::abs(z) - 1.0) < 1e-14));
}

TEST_CASE("zero distance is the identity and negative distance is rejected") {
  const auto f = random_field(8, 4);
  const auto g = angular_spectrum_propagate(f, 0.0);
  CHECK(std::memcmp(g.data().data(), f.data().data(), f.size() * sizeof(cd)) == 0);
  CHECK_THROWS(angular_spectrum_propagate(f, -1e-6));
}

TEST_CASE("4-f with a full-band unity filter is the identity") {
  const auto f = random_field(32, 5);
  const auto g = lff_forward(f, FourierFilter::full_band(32));
  CHECK(max_diff(g.data(), f.data()) < 1e-12);
}

TEST_CASE("circular low-pass of an impulse matches the DFT oracle") {
  const std::size_t n = 32, radius = n / 4;
  FourierFilter filt(n, radius, std::uint64_t{1});
  filt.set_uniform(cd(1, 0));
  ComplexField f(n, n, kPitch, kLambda);
  f.at(5, 9) = 1.0;
  auto spec = oracle::dft2(f.data(), n, n, false);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      // Support is the 2R x 2R block of offsets [-R, R) intersected with the disc.
      const double a = oracle::freq_index(r, n), b = oracle::freq_index(c, n), rr = static_cast<double>(radius);
      if (a >= rr || b >= rr || a * a + b * b > rr * rr) spec[r * n + c] = 0;
    }
  const auto expect = oracle::dft2(spec, n, n, true);
  CHECK(max_diff(lff_forward(f, filt).data(), expect) < 1e-10);
}

TEST_CASE("filter support and radius bound") {
  FourierFilter f(32, 8, std::uint64_t{7});
  std::size_t outside = 0;
  for (std::size_t i = 0; i < f.re.size(); ++i)
    if (f.mask()[i] == 0.0) {
      ++outside;
      CHECK(f.re.value[i] == 0.0);
      CHECK(f.im.value[i] == 0.0);
    }
  CHECK(outside > 0);
  CHECK(f.re.shape == Shape{16, 16});
  CHECK_THROWS_AS(FourierFilter(32, 17, std::uint64_t{1}), SizeError);
}

TEST_CASE("tape and field forward paths agree") {
  auto lff = OpticalModel::make_lff(16, 8, kPitch, kLambda, 3);
  auto d2 = OpticalModel::make_d2nn(16, 3, scaled_geometry(16));
  Rng rng(2);
  for (std::size_t k = 0; k < 3; ++k) {
    for (double& v : d2.layer(k).phase.value) v = rng.uniform(0, 6);
    d2.power_raw(k).value[0] = rng.uniform(-0.5, 0.5);
  }
  const auto f = random_field(16, 8);
  {
    Tape t;
    Var out = lff.forward_field(t.constant(CTensor({16, 16}, f.data())));
    CHECK(max_diff(out.cvalues(), lff_forward(f, lff.filter()).data()) < 1e-13);
  }
  for (std::size_t upto : {1u, 2u, 3u}) {
    Tape t;
    Var out = d2.forward_field(t.constant(CTensor({1, 16, 16}, f.data())), upto);
    CHECK(max_diff(out.cvalues(), d2nn_forward(f, d2, upto).data()) < 1e-13);
  }
  // Explicit chain from the DFT oracle for a single layer.
  std::vector<cd> z = propagate_oracle(f, d2.geometry().input_distance);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] *= std::polar(1.0, d2.layer(0).phase.value[i]);
  ComplexField mid(16, 16, kPitch, kLambda, z);
  auto out = propagate_oracle(mid, d2.geometry().detector_distance);
  for (cd& v : out) v *= std::exp(d2.power_raw(0).value[0]);
  CHECK(max_diff(d2nn_forward(f, d2, 1).data(), out) < 1e-10);

  Tape t;
  CHECK_THROWS_AS(d2.forward_field(t.constant(CTensor({16, 16}, f.data())), 4), std::out_of_range);
  CHECK_THROWS_AS(lff.forward_field(t.constant(CTensor({8, 8}, std::vector<cd>(64)))), SizeError);
}

TEST_CASE("D2NN starts with zero phase and unit power") {
  auto d2 = OpticalModel::make_d2nn(16, 2, scaled_geometry(16));
  CHECK(d2.layer_count() == 2);
  for (double v : d2.layer(1).phase.value) CHECK(v == 0.0);
  CHECK(d2.power(0) == 1.0);
  CHECK(d2.parameters().size() == 4);
  CHECK(d2.layer(0).phase.name == "d2nn.phase1");
  CHECK(d2.power_raw(1).name == "d2nn.power2");
}

TEST_CASE("OPTM1 round trip is bit exact for both optical kinds") {
  auto lff = OpticalModel::make_lff(16, 8, kPitch, kLambda, 11);
  auto d2 = OpticalModel::make_d2nn(16, 2, full_geometry());
  d2.layer(1).phase.value[3] = 1.0 / 3.0;
  for (OpticalModel* m : {&lff, &d2}) {
    std::stringstream ss;
    write_checkpoint(ss, m->to_checkpoint());
    CHECK(ss.str().substr(0, 8) == "OPTM0001");
    const std::string first = ss.str();
    auto back = OpticalModel::from_checkpoint(read_checkpoint(ss));
    std::stringstream again;
    write_checkpoint(again, back.to_checkpoint());
    CHECK(again.str() == first);
    CHECK(back.kind() == m->kind());
    CHECK(back.geometry().detector_distance == m->geometry().detector_distance);
  }
  auto full = OpticalModel::make_lff(16, 8, kPitch, kLambda, 1);
  full.filter() = FourierFilter::full_band(16);
  std::stringstream ss;
  write_checkpoint(ss, full.to_checkpoint());
  CHECK(OpticalModel::from_checkpoint(read_checkpoint(ss)).filter().is_full_band());
}
