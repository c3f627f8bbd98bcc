#include <doctest.h>

#include "cqpm/autodiff.hpp"
#include "cqpm/gradcheck.hpp"
#include "cqpm/gradcheck_suite.hpp"

using namespace cqpm;

TEST_CASE("elementary op suite passes central differences") {
  for (const auto& c : run_gradcheck_suite("autodiff")) {
    INFO(c.name);
    CHECK(c.report.passed());
    CHECK(c.report.max_rel_error() < 1e-4);
  }
}

TEST_CASE("scalar chain gradient by hand") {
  Parameter x("x", {1});
  x.value = {0.7};
  Tape t;
  Var y = ad::mul(ad::tanh(t.param(x)), ad::tanh(t.param(x)));  // tanh^2
  t.backward(ad::sum(y));
  const double th = std::tanh(0.7);
  CHECK(x.grad[0] == doctest::Approx(2 * th * (1 - th * th)).epsilon(1e-14));
}

TEST_CASE("intensity gradient is 2*z for a complex leaf") {
  Parameter re("re", {2}), im("im", {2});
  re.value = {0.3, -1.2};
  im.value = {0.5, 2.0};
  Tape t;
  t.backward(ad::sum(ad::intensity(ad::make_complex(t.param(re), t.param(im)))));
  CHECK(re.grad[0] == doctest::Approx(0.6));
  CHECK(im.grad[1] == doctest::Approx(4.0));
}

TEST_CASE("modulus gradient is z/|z| and zero at the origin") {
  Parameter re("re", {2}), im("im", {2});
  re.value = {3.0, 0.0};
  im.value = {4.0, 0.0};
  Tape t;
  Var m = ad::modulus(ad::make_complex(t.param(re), t.param(im)));
  CHECK(m.values()[0] == doctest::Approx(5.0));
  t.backward(ad::sum(m));
  CHECK(re.grad[0] == doctest::Approx(0.6));
  CHECK(im.grad[0] == doctest::Approx(0.8));
  CHECK(re.grad[1] == 0.0);
  CHECK(im.grad[1] == 0.0);
}

TEST_CASE("frozen parameters receive exactly zero gradient") {
  Parameter a("a", {3}, 0.5), b("b", {3}, 2.0);
  b.trainable = false;
  Tape t;
  t.backward(ad::sum(ad::mul(t.param(a), t.param(b))));
  for (double g : a.grad) CHECK(g == 2.0);
  for (double g : b.grad) CHECK(g == 0.0);

  const auto report = finite_difference_check(
      [&](Tape& tp) { return ad::sum(ad::mul(tp.param(a), tp.param(b))); }, std::vector<Parameter*>{&a, &b});
  CHECK(report.passed());
  CHECK(report.entries[1].frozen);
  CHECK(report.entries[1].max_abs_grad == 0.0);
}

TEST_CASE("gradients accumulate across tapes until cleared") {
  Parameter a("a", {1}, 1.0);
  for (int i = 0; i < 2; ++i) {
    Tape t;
    t.backward(ad::sum(ad::scale(t.param(a), 3.0)));
  }
  CHECK(a.grad[0] == 6.0);
  a.zero_grad();
  CHECK(a.grad[0] == 0.0);
}

TEST_CASE("tape misuse is reported") {
  Parameter a("a", {2}, 1.0);
  Tape t;
  Var v = t.param(a);
  CHECK_THROWS_AS(t.backward(v), TapeError);  // not a scalar
  Var s = ad::sum(v);
  t.backward(s);
  CHECK_THROWS_AS(t.backward(s), TapeError);  // single use
  CHECK_THROWS_AS(t.param(a), TapeError);
}

TEST_CASE("shape mismatches throw") {
  Tape t;
  Var a = t.constant(Tensor({2, 3}, std::vector<double>(6, 1.0)));
  Var b = t.constant(Tensor({3, 2}, std::vector<double>(6, 1.0)));
  CHECK_THROWS(ad::add(a, b));
  CHECK_THROWS(ad::fft2(t.constant(CTensor({3, 6}, std::vector<cd>(18))), false));
}

TEST_CASE("a deliberately wrong gradient is caught by the checker") {
  Parameter a("a", {4}, 0.3);
  const auto report = finite_difference_check(
      [&](Tape& t) {
        Var x = t.param(a);
        // Forward computes x^2 but backward claims 3x.
        std::vector<double> v;
        for (double e : x.values()) v.push_back(e * e);
        const std::size_t id = x.id;
        Var y = t.push(x.shape(), v, {x}, [id](Tape& tp, std::size_t self) {
          for (std::size_t i = 0; i < tp.node(id).rv.size(); ++i)
            tp.rgrad(id)[i] += 3 * tp.node(id).rv[i] * tp.node(self).rg[i];
        });
        return ad::sum(y);
      },
      std::vector<Parameter*>{&a});
  CHECK_FALSE(report.passed());
}
