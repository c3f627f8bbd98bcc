#pragma once

#include <string>

#include "cqpm/autodiff.hpp"
#include "cqpm/random.hpp"

namespace cqpm::nn {

// 3x3 convolution with zero padding 1 and Glorot-uniform weights.
struct Conv3x3 {
  Parameter weight;
  Parameter bias;
  std::size_t stride = 1;

  Conv3x3(const std::string& name, std::size_t in_ch, std::size_t out_ch, std::size_t stride, Rng& rng);
  Var operator()(Var x);
};

struct Dense {
  Parameter weight;
  Parameter bias;

  Dense(const std::string& name, std::size_t in, std::size_t out, Rng& rng);
  Var operator()(Var x);
};

}  // namespace cqpm::nn
