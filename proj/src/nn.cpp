#include "cqpm/nn.hpp"

#include <cmath>

namespace cqpm::nn {

namespace {
void glorot(Parameter& p, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : p.value) v = rng.uniform(-limit, limit);
}
}  // namespace

Conv3x3::Conv3x3(const std::string& name, std::size_t in_ch, std::size_t out_ch, std::size_t s, Rng& rng)
    : weight(name + ".w", {out_ch, in_ch, 3, 3}), bias(name + ".b", {out_ch}), stride(s) {
  glorot(weight, 9.0 * static_cast<double>(in_ch), 9.0 * static_cast<double>(out_ch), rng);
}

Var Conv3x3::operator()(Var x) {
  Tape& t = *x.tape;
  return ad::conv2d(x, t.param(weight), t.param(bias), stride);
}

Dense::Dense(const std::string& name, std::size_t in, std::size_t out, Rng& rng)
    : weight(name + ".w", {out, in}), bias(name + ".b", {out}) {
  glorot(weight, static_cast<double>(in), static_cast<double>(out), rng);
}

Var Dense::operator()(Var x) {
  Tape& t = *x.tape;
  return ad::dense(x, t.param(weight), t.param(bias));
}

}  // namespace cqpm::nn
