#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cqpm/gradcheck.hpp"

namespace cqpm {

struct SuiteCase {
  std::string module;
  std::string name;
  GradCheckReport report;
};

// Module names accepted by run_gradcheck_suite, besides "all".
std::vector<std::string> gradcheck_modules();

// Finite-difference checks of every differentiable operation in a module on
// small (<= 16x16) random inputs. Unknown module names throw.
std::vector<SuiteCase> run_gradcheck_suite(const std::string& module, std::uint64_t seed = 3);

}  // namespace cqpm
