#pragma once

// Tape-based reverse-mode differentiation. Complex intermediates are
// differentiated by treating (re, im) as independent real variables; a complex
// node's gradient is stored as dL/dre + j*dL/dim.

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqpm/tensor.hpp"

namespace cqpm {

class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A named learnable real tensor with a gradient accumulator.
struct Parameter {
  std::string name;
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool trainable = true;
  // Optional support mask; when set, value is multiplied by it after every update.
  std::vector<double> mask;

  Parameter() = default;
  Parameter(std::string n, Shape s, double fill = 0.0);

  std::size_t size() const { return value.size(); }
  void zero_grad();
  void project();
  // FNV-1a over the raw bytes of `value`.
  std::uint64_t checksum() const;
};

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Shape& shape() const;
  bool is_complex() const;
  std::size_t size() const;
  const std::vector<double>& values() const;
  const std::vector<cd>& cvalues() const;
  double item() const;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  struct Node {
    Shape shape;
    bool complex = false;
    bool requires_grad = false;
    std::vector<double> rv, rg;
    std::vector<cd> cv, cg;
    Parameter* param = nullptr;
    Backward backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var param(Parameter& p);
  Var constant(Tensor t);
  Var constant(CTensor t);
  Var scalar(double v);

  // Records an op result. `inputs` decide whether the node needs a gradient.
  Var push(Shape shape, std::vector<double> value, std::initializer_list<Var> inputs, Backward fn);
  Var push(Shape shape, std::vector<cd> value, std::initializer_list<Var> inputs, Backward fn);

  // Reverse sweep from a scalar real node; accumulates into Parameter::grad.
  // A tape can be swept once.
  void backward(Var loss);

  Node& node(std::size_t id) { return nodes_[id]; }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  bool wants(std::size_t id) const { return nodes_[id].requires_grad; }
  std::span<double> rgrad(std::size_t id) { return nodes_[id].rg; }
  std::span<cd> cgrad(std::size_t id) { return nodes_[id].cg; }

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  void check_open() const;
  std::deque<Node> nodes_;
  bool consumed_ = false;
};

namespace ad {

// Real elementwise.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_const(Var a, double c);
Var exp(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var clamp(Var a, double lo, double hi);
// a * s where s is a single-element real node.
Var mul_scalar(Var a, Var s);

// Reductions.
Var sum(Var a);
Var mean(Var a);
Var l1_loss(Var a, Var b);   // mean |a - b|
Var mse_loss(Var a, Var b);  // mean (a - b)^2

Var reshape(Var a, Shape shape);

// Image ops on [N, C, H, W].
Var conv2d(Var x, Var w, Var b, std::size_t stride = 1);
Var upsample2x(Var x);
Var avgpool2x2(Var x);
Var spatial_mean(Var x);  // [N, C, H, W] -> [N, C]

// [N, in] x [out, in]^T + [out] -> [N, out].
Var dense(Var x, Var w, Var b);

// Complex.
Var make_complex(Var re, Var im);
Var real_part(Var z);
Var imag_part(Var z);
Var intensity(Var z);                   // |z|^2, real
Var modulus(Var z);                     // |z|, real
Var fft2(Var z, bool inverse);          // over the trailing two axes
Var cmul(Var z, Var f);                 // f broadcast over leading axes of z
Var cmul_const(Var z, const CTensor& f);
Var cscale(Var z, Var s);               // z * s, s a real single-element node
Var phase_modulate(Var z, Var phase);   // z * exp(j*phase), phase broadcast over leading axes

}  // namespace ad
}  // namespace cqpm
