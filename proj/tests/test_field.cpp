#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

#include "cqpm/field.hpp"
#include "cqpm/random.hpp"
#include "oracles.hpp"

using namespace cqpm;

namespace {

ComplexField random_field(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  ComplexField f(rows, cols, 316.4e-9, 632.8e-9);
  for (cd& z : f.data()) z = cd(rng.uniform(-1, 1), rng.uniform(-1, 1));
  return f;
}

double max_diff(const std::vector<cd>& a, const std::vector<cd>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("fft2 matches the direct DFT on power-of-two grids") {
  for (std::size_t r : {1u, 2u, 4u, 8u, 16u})
    for (std::size_t c : {1u, 4u, 16u}) {
      const auto f = random_field(r, c, r * 100 + c);
      const auto fwd = fft2(f, Direction::forward);
      CHECK(max_diff(fwd.data(), oracle::dft2(f.data(), r, c, false)) < 1e-12);
      const auto inv = fft2(f, Direction::inverse);
      CHECK(max_diff(inv.data(), oracle::dft2(f.data(), r, c, true)) < 1e-12);
    }
}

TEST_CASE("fft2 round trip and energy") {
  const auto f = random_field(32, 32, 5);
  const auto back = fft2(fft2(f, Direction::forward), Direction::inverse);
  CHECK(max_diff(back.data(), f.data()) < 1e-13);
  CHECK(fft2(f, Direction::forward).energy() == doctest::Approx(f.energy()).epsilon(1e-13));
}

TEST_CASE("fft2 of a unit impulse is flat") {
  ComplexField f(8, 8, 1e-6, 1e-6);
  f.at(0, 0) = 1.0;
  const auto g = fft2(f, Direction::forward);
  for (const cd& z : g.data()) CHECK(std::abs(z - cd(0.125, 0)) < 1e-15);
}

TEST_CASE("non power-of-two sides are rejected") {
  ComplexField f(12, 16, 1e-6, 1e-6);
  CHECK_THROWS_AS(fft2(f, Direction::forward), SizeError);
}

TEST_CASE("field metadata is validated") {
  CHECK_THROWS(ComplexField(4, 4, 0.0, 1e-6));
  CHECK_THROWS(ComplexField(4, 4, 1e-6, -1.0));
  CHECK_THROWS(ComplexField(2, 2, 1e-6, 1e-6, std::vector<cd>(3)));
}

TEST_CASE("from_phase / extract_phase round trip") {
  Rng rng(9);
  RealGrid phi(8, 8, Role::phase);
  for (double& v : phi.data) v = rng.uniform(0, 2 * std::numbers::pi - 1e-9);
  const auto f = from_phase(phi, 1e-6, 1e-6);
  for (const cd& z : f.data()) CHECK(std::abs(z) == doctest::Approx(1.0));
  const auto back = extract_phase(f);
  for (std::size_t i = 0; i < phi.size(); ++i) CHECK(back.data[i] == doctest::Approx(phi.data[i]).epsilon(1e-12));
  CHECK(intensity(f).mean() == doctest::Approx(1.0));
}

TEST_CASE("out-of-range phases are wrapped and counted") {
  reset_phase_wrap_count();
  RealGrid phi(1, 3, Role::phase, std::vector<double>{-0.5, 1.0, 7.0});
  const auto f = from_phase(phi, 1e-6, 1e-6);
  CHECK(phase_wrap_count() == 2);
  CHECK(std::arg(f.at(0, 0)) == doctest::Approx(-0.5));
  CHECK(wrap_phase(2 * std::numbers::pi + 0.25) == doctest::Approx(0.25));
}

TEST_CASE("amplitude-weighted phase object") {
  RealGrid phi(1, 2, Role::phase, std::vector<double>{0.0, std::numbers::pi / 2});
  RealGrid amp(1, 2, Role::raw, std::vector<double>{2.0, 0.5});
  const auto f = from_phase(phi, &amp, 1e-6, 1e-6);
  CHECK(std::abs(f.at(0, 0) - cd(2, 0)) < 1e-15);
  CHECK(std::abs(f.at(0, 1) - cd(0, 0.5)) < 1e-15);
}

TEST_CASE("CFLD1 round trip is bit exact") {
  const auto f = random_field(4, 8, 17);
  std::stringstream ss;
  write_field(ss, f);
  CHECK(ss.str().substr(0, 8) == "CFLD0001");
  CHECK(ss.str().size() == 8 + 4 + 4 + 8 + 8 + 32 * 16);
  const auto g = read_field(ss);
  CHECK(g.rows() == 4);
  CHECK(g.cols() == 8);
  CHECK(g.pixel_pitch() == f.pixel_pitch());
  CHECK(g.wavelength() == f.wavelength());
  CHECK(std::memcmp(g.data().data(), f.data().data(), 32 * sizeof(cd)) == 0);
}

TEST_CASE("RGRD1 round trip keeps role and bits") {
  RealGrid g(3, 2, Role::phase_normalized, std::vector<double>{0.1, 0.2, 1.0 / 3.0, -0.0, 1e-300, 7});
  const auto path = std::filesystem::temp_directory_path() / "cqpm_test_grid.bin";
  save_grid(path, g);
  const auto h = load_grid(path);
  CHECK(h.role == Role::phase_normalized);
  CHECK(std::memcmp(h.data.data(), g.data.data(), 6 * sizeof(double)) == 0);
  std::filesystem::remove(path);
}

TEST_CASE("corrupt files are rejected") {
  std::stringstream bad("XXXX0001rest");
  CHECK_THROWS_AS(read_field(bad), FormatError);
  const auto f = random_field(4, 4, 1);
  std::stringstream ss;
  write_field(ss, f);
  std::stringstream truncated(ss.str().substr(0, 40));
  CHECK_THROWS_AS(read_field(truncated), FormatError);
  CHECK_THROWS(load_grid("/nonexistent/cqpm/grid.bin"));
}
