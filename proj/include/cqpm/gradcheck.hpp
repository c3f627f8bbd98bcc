#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cqpm/autodiff.hpp"

namespace cqpm {

struct GradCheckEntry {
  std::string parameter;
  std::size_t coords_checked = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  // Largest |backward gradient| seen; exactly 0 for frozen parameters.
  double max_abs_grad = 0.0;
  bool frozen = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 1e-4;
  double step = 1e-5;

  double max_rel_error() const;
  bool passed() const;
};

// Builds a fresh forward pass on the given tape and returns the scalar loss.
using LossBuilder = std::function<Var(Tape&)>;

// Compares backward() against central differences for every coordinate of
// every parameter (or an evenly strided subset of `max_coords` when nonzero).
// Relative error is |g_ad - g_fd| / max(|g_ad|, |g_fd|, 1e-6).
GradCheckReport finite_difference_check(const LossBuilder& build, std::span<Parameter* const> params,
                                        double h = 1e-5, double tol = 1e-4, std::size_t max_coords = 0);

}  // namespace cqpm
