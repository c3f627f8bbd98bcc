#include "cqpm/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace cqpm {

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

bool GradCheckReport::passed() const {
  for (const auto& e : entries) {
    if (e.frozen && e.max_abs_grad != 0.0) return false;
    if (!(e.max_rel_error < tolerance)) return false;
  }
  return true;
}

GradCheckReport finite_difference_check(const LossBuilder& build, std::span<Parameter* const> params,
                                        double h, double tol, std::size_t max_coords) {
  GradCheckReport report;
  report.tolerance = tol;
  report.step = h;

  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var loss = build(tape);
    tape.backward(loss);
  }
  auto eval = [&] {
    Tape tape;
    return build(tape).item();
  };

  for (Parameter* p : params) {
    GradCheckEntry e;
    e.parameter = p->name;
    e.frozen = !p->trainable;
    for (double g : p->grad) e.max_abs_grad = std::max(e.max_abs_grad, std::abs(g));
    if (e.frozen) {
      report.entries.push_back(e);
      continue;
    }
    const std::size_t n = p->size();
    const std::size_t count = (max_coords == 0 || max_coords >= n) ? n : max_coords;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t i = count == n ? k : (k * n) / count;
      const double orig = p->value[i];
      p->value[i] = orig + h;
      const double up = eval();
      p->value[i] = orig - h;
      const double down = eval();
      p->value[i] = orig;
      const double fd = (up - down) / (2.0 * h);
      const double ad = p->grad[i];
      const double abs_err = std::abs(ad - fd);
      const double rel = abs_err / std::max({std::abs(ad), std::abs(fd), 1e-6});
      e.max_abs_error = std::max(e.max_abs_error, abs_err);
      e.max_rel_error = std::max(e.max_rel_error, rel);
      ++e.coords_checked;
    }
    report.entries.push_back(e);
  }
  return report;
}

}  // namespace cqpm
