#include "cqpm/autodiff.hpp"

#include <cmath>
#include <cstring>

#include "cqpm/field.hpp"
#include "cqpm/kernels.hpp"

namespace cqpm {

Parameter::Parameter(std::string n, Shape s, double fill)
    : name(std::move(n)), shape(std::move(s)), value(numel(shape), fill), grad(numel(shape), 0.0) {}

void Parameter::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

void Parameter::project() {
  if (mask.empty()) return;
  for (std::size_t i = 0; i < value.size(); ++i) value[i] *= mask[i];
}

std::uint64_t Parameter::checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(value.data());
  for (std::size_t i = 0; i < value.size() * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

const Shape& Var::shape() const { return tape->node(id).shape; }
bool Var::is_complex() const { return tape->node(id).complex; }
std::size_t Var::size() const { return numel(shape()); }
const std::vector<double>& Var::values() const { return tape->node(id).rv; }
const std::vector<cd>& Var::cvalues() const { return tape->node(id).cv; }

double Var::item() const {
  const auto& n = tape->node(id);
  if (n.complex || n.rv.size() != 1) throw TapeError("item() requires a real scalar node");
  return n.rv[0];
}

void Tape::check_open() const {
  if (consumed_) throw TapeError("tape already consumed by backward(); record a new forward pass");
}

Var Tape::param(Parameter& p) {
  check_open();
  if (p.value.size() != numel(p.shape)) throw TapeError("parameter " + p.name + " has inconsistent shape");
  if (p.grad.size() != p.value.size()) p.grad.assign(p.value.size(), 0.0);
  Node n;
  n.shape = p.shape;
  n.rv = p.value;
  n.param = &p;
  n.requires_grad = p.trainable;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::constant(Tensor t) {
  check_open();
  Node n;
  n.shape = std::move(t.shape);
  n.rv = std::move(t.data);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::constant(CTensor t) {
  check_open();
  Node n;
  n.shape = std::move(t.shape);
  n.complex = true;
  n.cv = std::move(t.data);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::scalar(double v) { return constant(Tensor({1}, {v})); }

Var Tape::push(Shape shape, std::vector<double> value, std::initializer_list<Var> inputs, Backward fn) {
  check_open();
  Node n;
  n.shape = std::move(shape);
  n.rv = std::move(value);
  for (const Var& v : inputs) {
    if (v.tape != this) throw TapeError("op mixes nodes from different tapes");
    n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::push(Shape shape, std::vector<cd> value, std::initializer_list<Var> inputs, Backward fn) {
  check_open();
  Node n;
  n.shape = std::move(shape);
  n.complex = true;
  n.cv = std::move(value);
  for (const Var& v : inputs) {
    if (v.tape != this) throw TapeError("op mixes nodes from different tapes");
    n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  check_open();
  if (loss.tape != this) throw TapeError("loss belongs to another tape");
  Node& ln = nodes_[loss.id];
  if (ln.complex || ln.rv.size() != 1) throw TapeError("backward() requires a real scalar loss");
  consumed_ = true;
  for (auto& n : nodes_) {
    if (!n.requires_grad) continue;
    if (n.complex)
      n.cg.assign(n.cv.size(), cd{});
    else
      n.rg.assign(n.rv.size(), 0.0);
  }
  if (!ln.requires_grad) return;
  ln.rg[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad) continue;
    if (n.param) {
      for (std::size_t k = 0; k < n.rg.size(); ++k) n.param->grad[k] += n.rg[k];
    } else if (n.backward) {
      n.backward(*this, i);
    }
  }
}

namespace ad {

namespace {

void same_shape(Var a, Var b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
}

void require_real(Var a, const char* op) {
  if (a.is_complex()) throw std::invalid_argument(std::string(op) + " expects a real input");
}

void require_complex(Var a, const char* op) {
  if (!a.is_complex()) throw std::invalid_argument(std::string(op) + " expects a complex input");
}

void require_scalar(Var s, const char* op) {
  if (s.is_complex() || s.size() != 1)
    throw std::invalid_argument(std::string(op) + " expects a real single-element scale");
}

// Elementwise unary op with derivative computed from (input, output).
template <class F, class D>
Var unary(Var a, const char* op, F f, D dfdx) {
  require_real(a, op);
  const auto& x = a.values();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::size_t ia = a.id;
  return a.tape->push(a.shape(), std::move(y), {a}, [ia, dfdx](Tape& t, std::size_t self) {
    if (!t.wants(ia)) return;
    const auto& xv = t.node(ia).rv;
    const auto& yv = t.node(self).rv;
    const auto& g = t.node(self).rg;
    auto gx = t.rgrad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * dfdx(xv[i], yv[i]);
  });
}

std::size_t trailing_batch(Var z, Var f, const char* op) {
  const auto& zs = z.shape();
  const auto& fs = f.shape();
  if (fs.size() > zs.size() || !std::equal(fs.rbegin(), fs.rend(), zs.rbegin()))
    throw std::invalid_argument(std::string(op) + ": cannot broadcast " + shape_str(fs) + " over " +
                                shape_str(zs));
  return z.size() / f.size();
}

void require_nchw(Var x, const char* op) {
  require_real(x, op);
  if (x.shape().size() != 4) throw std::invalid_argument(std::string(op) + " expects [N,C,H,W]");
}

}  // namespace

Var add(Var a, Var b) {
  require_real(a, "add");
  same_shape(a, b, "add");
  std::vector<double> y(a.values());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.values()[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->push(a.shape(), std::move(y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const auto& g = t.node(self).rg;
    for (std::size_t in : {ia, ib}) {
      if (!t.wants(in)) continue;
      auto gx = t.rgrad(in);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  require_real(a, "sub");
  same_shape(a, b, "sub");
  std::vector<double> y(a.values());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= b.values()[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->push(a.shape(), std::move(y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const auto& g = t.node(self).rg;
    if (t.wants(ia)) {
      auto gx = t.rgrad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (t.wants(ib)) {
      auto gx = t.rgrad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_real(a, "mul");
  same_shape(a, b, "mul");
  std::vector<double> y(a.values());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b.values()[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->push(a.shape(), std::move(y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const auto& g = t.node(self).rg;
    const auto& av = t.node(ia).rv;
    const auto& bv = t.node(ib).rv;
    if (t.wants(ia)) {
      auto gx = t.rgrad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * bv[i];
    }
    if (t.wants(ib)) {
      auto gx = t.rgrad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double c) {
  return unary(a, "scale", [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_const(Var a, double c) {
  return unary(a, "add_const", [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var exp(Var a) {
  return unary(a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var tanh(Var a) {
  return unary(a, "tanh", [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var softplus(Var a) {
  return unary(
      a, "softplus",
      [](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      [](double x, double) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Var clamp(Var a, double lo, double hi) {
  return unary(a, "clamp", [lo, hi](double x) { return std::min(hi, std::max(lo, x)); },
               [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var mul_scalar(Var a, Var s) {
  require_real(a, "mul_scalar");
  require_scalar(s, "mul_scalar");
  const double sv = s.values()[0];
  std::vector<double> y(a.values());
  for (auto& v : y) v *= sv;
  const std::size_t ia = a.id, is = s.id;
  return a.tape->push(a.shape(), std::move(y), {a, s}, [ia, is](Tape& t, std::size_t self) {
    const auto& g = t.node(self).rg;
    const auto& av = t.node(ia).rv;
    const double sv = t.node(is).rv[0];
    if (t.wants(ia)) {
      auto gx = t.rgrad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * sv;
    }
    if (t.wants(is)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * av[i];
      t.rgrad(is)[0] += acc;
    }
  });
}

Var sum(Var a) {
  require_real(a, "sum");
  double s = 0.0;
  for (double v : a.values()) s += v;
  const std::size_t ia = a.id;
  return a.tape->push({1}, std::vector<double>{s}, {a}, [ia](Tape& t, std::size_t self) {
    if (!t.wants(ia)) return;
    const double g = t.node(self).rg[0];
    for (auto& v : t.rgrad(ia)) v += g;
  });
}

Var mean(Var a) {
  require_real(a, "mean");
  double s = 0.0;
  for (double v : a.values()) s += v;
  const double n = static_cast<double>(a.size());
  const std::size_t ia = a.id;
  return a.tape->push({1}, std::vector<double>{s / n}, {a}, [ia, n](Tape& t, std::size_t self) {
    if (!t.wants(ia)) return;
    const double g = t.node(self).rg[0] / n;
    for (auto& v : t.rgrad(ia)) v += g;
  });
}

Var l1_loss(Var a, Var b) {
  require_real(a, "l1_loss");
  same_shape(a, b, "l1_loss");
  const auto& av = a.values();
  const auto& bv = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += std::abs(av[i] - bv[i]);
  const double n = static_cast<double>(av.size());
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->push({1}, std::vector<double>{s / n}, {a, b}, [ia, ib, n](Tape& t, std::size_t self) {
    const double g = t.node(self).rg[0] / n;
    const auto& x = t.node(ia).rv;
    const auto& y = t.node(ib).rv;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - y[i];
      const double sg = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
      if (t.wants(ia)) t.rgrad(ia)[i] += g * sg;
      if (t.wants(ib)) t.rgrad(ib)[i] -= g * sg;
    }
  });
}

Var mse_loss(Var a, Var b) {
  require_real(a, "mse_loss");
  same_shape(a, b, "mse_loss");
  const auto& av = a.values();
  const auto& bv = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += (av[i] - bv[i]) * (av[i] - bv[i]);
  const double n = static_cast<double>(av.size());
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->push({1}, std::vector<double>{s / n}, {a, b}, [ia, ib, n](Tape& t, std::size_t self) {
    const double g = t.node(self).rg[0] / n;
    const auto& x = t.node(ia).rv;
    const auto& y = t.node(ib).rv;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = 2.0 * (x[i] - y[i]);
      if (t.wants(ia)) t.rgrad(ia)[i] += g * d;
      if (t.wants(ib)) t.rgrad(ib)[i] -= g * d;
    }
  });
}

Var reshape(Var a, Shape shape) {
  if (numel(shape) != a.size())
    throw std::invalid_argument("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  const std::size_t ia = a.id;
  if (a.is_complex()) {
    return a.tape->push(std::move(shape), a.cvalues(), {a}, [ia](Tape& t, std::size_t self) {
      if (!t.wants(ia)) return;
      const auto& g = t.node(self).cg;
      auto gx = t.cgrad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return a.tape->push(std::move(shape), a.values(), {a}, [ia](Tape& t, std::size_t self) {
    if (!t.wants(ia)) return;
    const auto& g = t.node(self).rg;
    auto gx = t.rgrad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var conv2d(Var x, Var w, Var b, std::size_t stride) {
  require_nchw(x, "conv2d");
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  if (ws.size() != 4 || ws[1] != xs[1] || ws[2] != 3 || ws[3] != 3)
    throw std::invalid_argument("conv2d: weight " + shape_str(ws) + " incompatible with input " +
                                shape_str(xs));
  if (b.shape() != Shape{ws[0]}) throw std::invalid_argument("conv2d: bias shape mismatch");
  if (stride == 0) throw std::invalid_argument("conv2d: stride must be positive");
  kernels::ConvShape cs{xs[0], xs[1], ws[0], xs[2], xs[3], stride};
  std::vector<double> y(cs.batch * cs.out_ch * cs.out_h() * cs.out_w());
  kernels::conv2d_forward(cs, x.values(), w.values(), b.values(), y);
  const std::size_t ix = x.id, iw = w.id, ib = b.id;
  return x.tape->push({cs.batch, cs.out_ch, cs.out_h(), cs.out_w()}, std::move(y), {x, w, b},
                      [cs, ix, iw, ib](Tape& t, std::size_t self) {
                        const auto& g = t.node(self).rg;
                        if (t.wants(ix)) kernels::conv2d_backward_input(cs, g, t.node(iw).rv, t.rgrad(ix));
                        if (t.wants(iw) || t.wants(ib)) {
                          std::vector<double> gw(t.node(iw).rv.size(), 0.0), gb(cs.out_ch, 0.0);
                          kernels::conv2d_backward_params(cs, t.node(ix).rv, g, gw, gb);
                          if (t.wants(iw)) {
                            auto dst = t.rgrad(iw);
                            for (std::size_t i = 0; i < gw.size(); ++i) dst[i] += gw[i];
                          }
                          if (t.wants(ib)) {
                            auto dst = t.rgrad(ib);
                            for (std::size_t i = 0; i < gb.size(); ++i) dst[i] += gb[i];
                          }
                        }
                      });
}

Var upsample2x(Var x) {
  require_nchw(x, "upsample2x");
  const auto s = x.shape();
  const std::size_t planes = s[0] * s[1], h = s[2], w = s[3];
  std::vector<double> y(planes * 4 * h * w);
  const auto& xv = x.values();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < 2 * h; ++i)
      for (std::size_t j = 0; j < 2 * w; ++j)
        y[(p * 2 * h + i) * 2 * w + j] = xv[(p * h + i / 2) * w + j / 2];
  const std::size_t ix = x.id;
  return x.tape->push({s[0], s[1], 2 * h, 2 * w}, std::move(y), {x},
                      [ix, planes, h, w](Tape& t, std::size_t self) {
                        if (!t.wants(ix)) return;
                        const auto& g = t.node(self).rg;
                        auto gx = t.rgrad(ix);
                        for (std::size_t p = 0; p < planes; ++p)
                          for (std::size_t i = 0; i < 2 * h; ++i)
                            for (std::size_t j = 0; j < 2 * w; ++j)
                              gx[(p * h + i / 2) * w + j / 2] += g[(p * 2 * h + i) * 2 * w + j];
                      });
}

Var avgpool2x2(Var x) {
  require_nchw(x, "avgpool2x2");
  const auto s = x.shape();
  if (s[2] % 2 || s[3] % 2)
    throw std::invalid_argument("avgpool2x2: sides must be even, got " + shape_str(s));
  const std::size_t planes = s[0] * s[1], h = s[2] / 2, w = s[3] / 2;
  const auto& xv = x.values();
  std::vector<double> y(planes * h * w);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const std::size_t r0 = (p * 2 * h + 2 * i) * 2 * w + 2 * j;
        const std::size_t r1 = r0 + 2 * w;
        y[(p * h + i) * w + j] = 0.25 * (xv[r0] + xv[r0 + 1] + xv[r1] + xv[r1 + 1]);
      }
  const std::size_t ix = x.id;
  return x.tape->push({s[0], s[1], h, w}, std::move(y), {x}, [ix, planes, h, w](Tape& t, std::size_t self) {
    if (!t.wants(ix)) return;
    const auto& g = t.node(self).rg;
    auto gx = t.rgrad(ix);
    for (std::size_t p = 0; p < planes; ++p)
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
          const double gv = 0.25 * g[(p * h + i) * w + j];
          const std::size_t r0 = (p * 2 * h + 2 * i) * 2 * w + 2 * j;
          const std::size_t r1 = r0 + 2 * w;
          gx[r0] += gv;
          gx[r0 + 1] += gv;
          gx[r1] += gv;
          gx[r1 + 1] += gv;
        }
  });
}

Var spatial_mean(Var x) {
  require_nchw(x, "spatial_mean");
  const auto s = x.shape();
  const std::size_t planes = s[0] * s[1], area = s[2] * s[3];
  const auto& xv = x.values();
  std::vector<double> y(planes);
  for (std::size_t p = 0; p < planes; ++p) {
    double acc = 0.0;
    for (std::size_t k = 0; k < area; ++k) acc += xv[p * area + k];
    y[p] = acc / static_cast<double>(area);
  }
  const std::size_t ix = x.id;
  return x.tape->push({s[0], s[1]}, std::move(y), {x}, [ix, planes, area](Tape& t, std::size_t self) {
    if (!t.wants(ix)) return;
    const auto& g = t.node(self).rg;
    auto gx = t.rgrad(ix);
    for (std::size_t p = 0; p < planes; ++p) {
      const double gv = g[p] / static_cast<double>(area);
      for (std::size_t k = 0; k < area; ++k) gx[p * area + k] += gv;
    }
  });
}

Var dense(Var x, Var w, Var b) {
  require_real(x, "dense");
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  if (xs.size() != 2 || ws.size() != 2 || ws[1] != xs[1] || b.shape() != Shape{ws[0]})
    throw std::invalid_argument("dense: incompatible shapes x" + shape_str(xs) + " w" + shape_str(ws));
  const std::size_t n = xs[0], in = xs[1], out = ws[0];
  const auto& xv = x.values();
  const auto& wv = w.values();
  const auto& bv = b.values();
  std::vector<double> y(n * out);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t o = 0; o < out; ++o) {
      double acc = bv[o];
      for (std::size_t i = 0; i < in; ++i) acc += wv[o * in + i] * xv[r * in + i];
      y[r * out + o] = acc;
    }
  const std::size_t ix = x.id, iw = w.id, ib = b.id;
  return x.tape->push({n, out}, std::move(y), {x, w, b}, [=](Tape& t, std::size_t self) {
    const auto& g = t.node(self).rg;
    const auto& xv2 = t.node(ix).rv;
    const auto& wv2 = t.node(iw).rv;
    if (t.wants(ix)) {
      auto gx = t.rgrad(ix);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t o = 0; o < out; ++o) {
          const double gv = g[r * out + o];
          for (std::size_t i = 0; i < in; ++i) gx[r * in + i] += gv * wv2[o * in + i];
        }
    }
    if (t.wants(iw)) {
      auto gw = t.rgrad(iw);
      for (std::size_t o = 0; o < out; ++o)
        for (std::size_t i = 0; i < in; ++i) {
          double acc = 0.0;
          for (std::size_t r = 0; r < n; ++r) acc += g[r * out + o] * xv2[r * in + i];
          gw[o * in + i] += acc;
        }
    }
    if (t.wants(ib)) {
      auto gb = t.rgrad(ib);
      for (std::size_t o = 0; o < out; ++o) {
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) acc += g[r * out + o];
        gb[o] += acc;
      }
    }
  });
}

Var make_complex(Var re, Var im) {
  require_real(re, "make_complex");
  require_real(im, "make_complex");
  same_shape(re, im, "make_complex");
  std::vector<cd> z(re.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = cd(re.values()[i], im.values()[i]);
  const std::size_t ir = re.id, ii = im.id;
  return re.tape->push(re.shape(), std::move(z), {re, im}, [ir, ii](Tape& t, std::size_t self) {
    const auto& g = t.node(self).cg;
    if (t.wants(ir)) {
      auto gx = t.rgrad(ir);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i].real();
    }
    if (t.wants(ii)) {
      auto gx = t.rgrad(ii);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i].imag();
    }
  });
}

Var real_part(Var z) {
  require_complex(z, "real_part");
  std::vector<double> y(z.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = z.cvalues()[i].real();
  const std::size_t iz = z.id;
  return z.tape->push(z.shape(), std::move(y), {z}, [iz](Tape& t, std::size_t self) {
    if (!t.wants(iz)) return;
    const auto& g = t.node(self).rg;
    auto gz = t.cgrad(iz);
    for (std::size_t i = 0; i < g.size(); ++i) gz[i] += cd(g[i], 0.0);
  });
}

Var imag_part(Var z) {
  require_complex(z, "imag_part");
  std::vector<double> y(z.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = z.cvalues()[i].imag();
  const std::size_t iz = z.id;
  return z.tape->push(z.shape(), std::move(y), {z}, [iz](Tape& t, std::size_t self) {
    if (!t.wants(iz)) return;
    const auto& g = t.node(self).rg;
    auto gz = t.cgrad(iz);
    for (std::size_t i = 0; i < g.size(); ++i) gz[i] += cd(0.0, g[i]);
  });
}

Var intensity(Var z) {
  require_complex(z, "intensity");
  std::vector<double> y(z.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const cd v = z.cvalues()[i];
    y[i] = v.real() * v.real() + v.imag() * v.imag();
  }
  const std::size_t iz = z.id;
  return z.tape->push(z.shape(), std::move(y), {z}, [iz](Tape& t, std::size_t self) {
    if (!t.wants(iz)) return;
    const auto& g = t.node(self).rg;
    const auto& zv = t.node(iz).cv;
    auto gz = t.cgrad(iz);
    for (std::size_t i = 0; i < g.size(); ++i) gz[i] += 2.0 * g[i] * zv[i];
  });
}

Var modulus(Var z) {
  require_complex(z, "modulus");
  std::vector<double> y(z.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::abs(z.cvalues()[i]);
  const std::size_t iz = z.id;
  return z.tape->push(z.shape(), std::move(y), {z}, [iz](Tape& t, std::size_t self) {
    if (!t.wants(iz)) return;
    const auto& g = t.node(self).rg;
    const auto& out = t.node(self).rv;
    const auto& zv = t.node(iz).cv;
    auto gz = t.cgrad(iz);
    // d|z| = z / |z|; zero subgradient at the origin.
    for (std::size_t i = 0; i < g.size(); ++i)
      if (out[i] > 0.0) gz[i] += g[i] * zv[i] / out[i];
  });
}

Var fft2(Var z, bool inverse) {
  require_complex(z, "fft2");
  const auto& s = z.shape();
  if (s.size() < 2) throw std::invalid_argument("fft2 expects at least 2 axes");
  const std::size_t rows = s[s.size() - 2], cols = s[s.size() - 1];
  if (!is_power_of_two(rows) || !is_power_of_two(cols))
    throw std::invalid_argument("fft2 requires power-of-two sides");
  const std::size_t batch = z.size() / (rows * cols);
  std::vector<cd> y(z.cvalues());
  kernels::fft2(y, batch, rows, cols, inverse);
  const std::size_t iz = z.id;
  return z.tape->push(s, std::move(y), {z}, [=](Tape& t, std::size_t self) {
    if (!t.wants(iz)) return;
    // Adjoint of a unitary transform is its inverse.
    std::vector<cd> g(t.node(self).cg);
    kernels::fft2(g, batch, rows, cols, !inverse);
    auto gz = t.cgrad(iz);
    for (std::size_t i = 0; i < g.size(); ++i) gz[i] += g[i];
  });
}

Var cmul(Var z, Var f) {
  require_complex(z, "cmul");
  require_complex(f, "cmul");
  const std::size_t batch = trailing_batch(z, f, "cmul");
  std::vector<cd> y(z.cvalues());
  kernels::cmul_broadcast(y, f.cvalues(), batch, false);
  const std::size_t iz = z.id, iff = f.id;
  return z.tape->push(z.shape(), std::move(y), {z, f}, [=](Tape& t, std::size_t self) {
    const auto& g = t.node(self).cg;
    if (t.wants(iz)) {
      std::vector<cd> gz(g);
      kernels::cmul_broadcast(gz, t.node(iff).cv, batch, true);
      auto dst = t.cgrad(iz);
      for (std::size_t i = 0; i < gz.size(); ++i) dst[i] += gz[i];
    }
    if (t.wants(iff)) {
      const auto& zv = t.node(iz).cv;
      auto dst = t.cgrad(iff);
      const std::size_t plane = dst.size();
      for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t i = 0; i < plane; ++i) dst[i] += g[n * plane + i] * std::conj(zv[n * plane + i]);
    }
  });
}

Var cmul_const(Var z, const CTensor& f) {
  require_complex(z, "cmul_const");
  const auto& zs = z.shape();
  if (f.shape.size() > zs.size() || !std::equal(f.shape.rbegin(), f.shape.rend(), zs.rbegin()))
    throw std::invalid_argument("cmul_const: cannot broadcast " + shape_str(f.shape) + " over " +
                                shape_str(zs));
  const std::size_t batch = z.size() / f.size();
  std::vector<cd> y(z.cvalues());
  kernels::cmul_broadcast(y, f.data, batch, false);
  const std::size_t iz = z.id;
  return z.tape->push(zs, std::move(y), {z}, [iz, batch, f](Tape& t, std::size_t self) {
    if (!t.wants(iz)) return;
    std::vector<cd> gz(t.node(self).cg);
    kernels::cmul_broadcast(gz, f.data, batch, true);
    auto dst = t.cgrad(iz);
    for (std::size_t i = 0; i < gz.size(); ++i) dst[i] += gz[i];
  });
}

Var cscale(Var z, Var s) {
  require_complex(z, "cscale");
  require_scalar(s, "cscale");
  const double sv = s.values()[0];
  std::vector<cd> y(z.cvalues());
  for (auto& v : y) v *= sv;
  const std::size_t iz = z.id, is = s.id;
  return z.tape->push(z.shape(), std::move(y), {z, s}, [iz, is](Tape& t, std::size_t self) {
    const auto& g = t.node(self).cg;
    const double sv = t.node(is).rv[0];
    if (t.wants(iz)) {
      auto dst = t.cgrad(iz);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * sv;
    }
    if (t.wants(is)) {
      const auto& zv = t.node(iz).cv;
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += (std::conj(g[i]) * zv[i]).real();
      t.rgrad(is)[0] += acc;
    }
  });
}

Var phase_modulate(Var z, Var phase) {
  require_complex(z, "phase_modulate");
  require_real(phase, "phase_modulate");
  const std::size_t batch = trailing_batch(z, phase, "phase_modulate");
  const std::size_t plane = phase.size();
  std::vector<cd> rot(plane);
  for (std::size_t i = 0; i < plane; ++i) rot[i] = std::polar(1.0, phase.values()[i]);
  std::vector<cd> y(z.cvalues());
  kernels::cmul_broadcast(y, rot, batch, false);
  const std::size_t iz = z.id, ip = phase.id;
  return z.tape->push(z.shape(), std::move(y), {z, phase},
                      [iz, ip, batch, plane, rot = std::move(rot)](Tape& t, std::size_t self) {
                        const auto& g = t.node(self).cg;
                        if (t.wants(iz)) {
                          std::vector<cd> gz(g);
                          kernels::cmul_broadcast(gz, rot, batch, true);
                          auto dst = t.cgrad(iz);
                          for (std::size_t i = 0; i < gz.size(); ++i) dst[i] += gz[i];
                        }
                        if (t.wants(ip)) {
                          // dy/dphi = j*y
                          const auto& yv = t.node(self).cv;
                          auto dst = t.rgrad(ip);
                          for (std::size_t n = 0; n < batch; ++n)
                            for (std::size_t i = 0; i < plane; ++i) {
                              const cd jy = cd(0.0, 1.0) * yv[n * plane + i];
                              dst[i] += (std::conj(g[n * plane + i]) * jy).real();
                            }
                        }
                      });
}

}  // namespace ad
}  // namespace cqpm
