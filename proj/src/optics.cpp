#include "cqpm/optics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "cqpm/kernels.hpp"
#include "cqpm/random.hpp"

namespace cqpm::optics {

namespace {

double signed_freq(std::size_t k, std::size_t n, double pitch) {
  const auto ks = static_cast<double>(k < (n + 1) / 2 ? static_cast<std::ptrdiff_t>(k)
                                                      : static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(n));
  return ks / (static_cast<double>(n) * pitch);
}

void check_distance(double d) {
  if (!(d >= 0.0)) throw std::invalid_argument("propagation distance must be non-negative");
}

// Scatter masked 2R x 2R coefficients into a grid x grid spectrum.
std::size_t bin_of(std::size_t a, std::size_t radius, std::size_t grid) {
  const auto off = static_cast<std::ptrdiff_t>(a) - static_cast<std::ptrdiff_t>(radius);
  const auto g = static_cast<std::ptrdiff_t>(grid);
  return static_cast<std::size_t>(((off % g) + g) % g);
}

}  // namespace

Geometry full_geometry() { return Geometry{}; }

Geometry scaled_geometry(std::size_t side) {
  Geometry g;
  const double s = static_cast<double>(side) / 256.0;
  g.input_distance *= s;
  g.layer_distance *= s;
  g.detector_distance *= s;
  return g;
}

CTensor transfer_function(std::size_t rows, std::size_t cols, double pitch, double wavelength,
                          double distance) {
  check_distance(distance);
  CTensor h({rows, cols});
  const double inv_l2 = 1.0 / (wavelength * wavelength);
  for (std::size_t r = 0; r < rows; ++r) {
    const double v = signed_freq(r, rows, pitch);
    for (std::size_t c = 0; c < cols; ++c) {
      const double u = signed_freq(c, cols, pitch);
      const double arg = inv_l2 - u * u - v * v;
      h[r * cols + c] = arg > 0.0 ? std::polar(1.0, 2.0 * std::numbers::pi * distance * std::sqrt(arg)) : cd{};
    }
  }
  return h;
}

ComplexField angular_spectrum_propagate(const ComplexField& f, double distance) {
  check_distance(distance);
  if (distance == 0.0) return f;
  if (!is_power_of_two(f.rows()) || !is_power_of_two(f.cols()))
    throw SizeError("propagation requires power-of-two sides");
  const CTensor h = transfer_function(f.rows(), f.cols(), f.pixel_pitch(), f.wavelength(), distance);
  ComplexField out = f;
  kernels::fft2(out.data(), 1, f.rows(), f.cols(), false);
  kernels::cmul_broadcast(out.data(), h.data, 1, false);
  kernels::fft2(out.data(), 1, f.rows(), f.cols(), true);
  return out;
}

Var propagate(Var z, double pitch, double wavelength, double distance) {
  check_distance(distance);
  if (distance == 0.0) return z;
  const auto& s = z.shape();
  const CTensor h = transfer_function(s[s.size() - 2], s[s.size() - 1], pitch, wavelength, distance);
  return ad::fft2(ad::cmul_const(ad::fft2(z, false), h), true);
}

FourierFilter::FourierFilter(std::size_t grid, std::size_t radius, bool full_band)
    : re("lff.re", {2 * radius, 2 * radius}),
      im("lff.im", {2 * radius, 2 * radius}),
      grid_(grid),
      radius_(radius),
      full_band_(full_band) {
  if (radius == 0) throw std::invalid_argument("filter radius must be positive");
  if (2 * radius > grid)
    throw SizeError("filter radius " + std::to_string(radius) + " exceeds half the grid " + std::to_string(grid));
  const std::size_t side = 2 * radius;
  std::vector<double> mask(side * side, 1.0);
  if (!full_band) {
    const double r2 = static_cast<double>(radius) * static_cast<double>(radius);
    for (std::size_t a = 0; a < side; ++a)
      for (std::size_t b = 0; b < side; ++b) {
        const double da = static_cast<double>(a) - static_cast<double>(radius);
        const double db = static_cast<double>(b) - static_cast<double>(radius);
        mask[a * side + b] = (da * da + db * db <= r2) ? 1.0 : 0.0;
      }
  }
  re.mask = mask;
  im.mask = std::move(mask);
}

FourierFilter::FourierFilter(std::size_t grid, std::size_t radius, std::uint64_t seed)
    : FourierFilter(grid, radius, false) {
  Rng rng(seed);
  for (std::size_t i = 0; i < re.size(); ++i) {
    re.value[i] = rng.uniform(-1.0, 1.0);
    im.value[i] = rng.uniform(-1.0, 1.0);
  }
  re.project();
  im.project();
}

FourierFilter FourierFilter::full_band(std::size_t grid) {
  FourierFilter f(grid, grid / 2, true);
  f.set_uniform(cd(1.0, 0.0));
  return f;
}

void FourierFilter::set_uniform(cd value) {
  std::fill(re.value.begin(), re.value.end(), value.real());
  std::fill(im.value.begin(), im.value.end(), value.imag());
  re.project();
  im.project();
}

CTensor FourierFilter::spectrum() const {
  CTensor s({grid_, grid_});
  const std::size_t side = 2 * radius_;
  for (std::size_t a = 0; a < side; ++a)
    for (std::size_t b = 0; b < side; ++b) {
      const std::size_t k = a * side + b;
      s[bin_of(a, radius_, grid_) * grid_ + bin_of(b, radius_, grid_)] =
          cd(re.value[k] * re.mask[k], im.value[k] * im.mask[k]);
    }
  return s;
}

Var FourierFilter::spectrum(Tape& tape) {
  Var coeff = ad::make_complex(tape.param(re), tape.param(im));
  const std::size_t side = 2 * radius_, grid = grid_, radius = radius_;
  const std::vector<double> mask = re.mask;
  std::vector<cd> s(grid * grid);
  for (std::size_t a = 0; a < side; ++a)
    for (std::size_t b = 0; b < side; ++b) {
      const std::size_t k = a * side + b;
      s[bin_of(a, radius, grid) * grid + bin_of(b, radius, grid)] = coeff.cvalues()[k] * mask[k];
    }
  const std::size_t ic = coeff.id;
  return tape.push({grid, grid}, std::move(s), {coeff}, [=](Tape& t, std::size_t self) {
    if (!t.wants(ic)) return;
    const auto& g = t.node(self).cg;
    auto gc = t.cgrad(ic);
    for (std::size_t a = 0; a < side; ++a)
      for (std::size_t b = 0; b < side; ++b) {
        const std::size_t k = a * side + b;
        gc[k] += g[bin_of(a, radius, grid) * grid + bin_of(b, radius, grid)] * mask[k];
      }
  });
}

ComplexField lff_forward(const ComplexField& f, const FourierFilter& filter) {
  if (f.rows() != filter.grid() || f.cols() != filter.grid())
    throw SizeError("field " + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                    " does not match filter grid " + std::to_string(filter.grid()));
  ComplexField out = f;
  kernels::fft2(out.data(), 1, f.rows(), f.cols(), false);
  kernels::cmul_broadcast(out.data(), filter.spectrum().data, 1, false);
  kernels::fft2(out.data(), 1, f.rows(), f.cols(), true);
  return out;
}

Var lff_forward(Var z, FourierFilter& filter) {
  const auto& s = z.shape();
  if (s.size() < 2 || s[s.size() - 1] != filter.grid() || s[s.size() - 2] != filter.grid())
    throw SizeError("field " + shape_str(s) + " does not match filter grid " + std::to_string(filter.grid()));
  Var spec = filter.spectrum(*z.tape);
  return ad::fft2(ad::cmul(ad::fft2(z, false), spec), true);
}

OpticalModel OpticalModel::make_lff(std::size_t grid, std::size_t radius, double pitch, double wavelength,
                                    std::uint64_t seed) {
  if (!is_power_of_two(grid)) throw SizeError("optical grid must be a power of two");
  OpticalModel m;
  m.kind_ = OpticsKind::lff;
  m.grid_ = grid;
  m.geometry_.pitch = pitch;
  m.geometry_.wavelength = wavelength;
  m.filter_.emplace(grid, radius, seed);
  return m;
}

OpticalModel OpticalModel::make_d2nn(std::size_t grid, std::size_t layers, const Geometry& geometry) {
  if (!is_power_of_two(grid)) throw SizeError("optical grid must be a power of two");
  if (layers == 0) throw std::invalid_argument("a diffractive model needs at least one layer");
  OpticalModel m;
  m.kind_ = OpticsKind::d2nn;
  m.grid_ = grid;
  m.geometry_ = geometry;
  m.layers_.reserve(layers);
  m.powers_.reserve(layers);
  for (std::size_t i = 0; i < layers; ++i) {
    DiffractiveLayer l{Parameter("d2nn.phase" + std::to_string(i + 1), {grid, grid}),
                       i + 1 == layers ? geometry.detector_distance : geometry.layer_distance};
    m.layers_.push_back(std::move(l));
    // P_i = exp(0) = 1 at construction.
    m.powers_.emplace_back("d2nn.power" + std::to_string(i + 1), Shape{1}, 0.0);
  }
  return m;
}

double OpticalModel::power(std::size_t i) const { return std::exp(powers_.at(i).value[0]); }

Var OpticalModel::forward_field(Var input, std::size_t upto) {
  const auto& s = input.shape();
  if (s.size() < 2 || s[s.size() - 1] != grid_ || s[s.size() - 2] != grid_)
    throw SizeError("input " + shape_str(s) + " does not match optical grid " + std::to_string(grid_));
  if (kind_ == OpticsKind::lff) return lff_forward(input, *filter_);

  const std::size_t n = upto == 0 ? layers_.size() : upto;
  if (n < 1 || n > layers_.size())
    throw std::out_of_range("layer index " + std::to_string(upto) + " outside [1, " +
                            std::to_string(layers_.size()) + "]");
  Tape& tape = *input.tape;
  const double pitch = geometry_.pitch, wl = geometry_.wavelength;
  Var z = propagate(input, pitch, wl, geometry_.input_distance);
  for (std::size_t k = 0; k < n; ++k) {
    z = ad::phase_modulate(z, tape.param(layers_[k].phase));
    z = propagate(z, pitch, wl, k + 1 == n ? geometry_.detector_distance : geometry_.layer_distance);
  }
  return ad::cscale(z, ad::exp(tape.param(powers_[n - 1])));
}

Var OpticalModel::forward_intensity(Var input, std::size_t upto) {
  return ad::intensity(forward_field(input, upto));
}

std::vector<Parameter*> OpticalModel::parameters() {
  std::vector<Parameter*> out;
  if (filter_) {
    out.push_back(&filter_->re);
    out.push_back(&filter_->im);
  }
  for (auto& l : layers_) out.push_back(&l.phase);
  for (auto& p : powers_) out.push_back(&p);
  return out;
}

void OpticalModel::set_trainable(bool trainable) {
  for (Parameter* p : parameters()) p->trainable = trainable;
}

Checkpoint OpticalModel::to_checkpoint() const {
  Checkpoint c;
  c.kind = kind_ == OpticsKind::lff ? ModelKind::lff : ModelKind::d2nn;
  c.grid = static_cast<std::uint32_t>(grid_);
  c.geometry = {geometry_.wavelength,     geometry_.pitch,
                geometry_.input_distance, geometry_.layer_distance,
                geometry_.detector_distance, static_cast<double>(layers_.size()),
                filter_ ? static_cast<double>(filter_->radius()) : 0.0,
                filter_ && filter_->is_full_band() ? 1.0 : 0.0};
  if (filter_) {
    c.add(filter_->re);
    c.add(filter_->im);
  }
  for (const auto& l : layers_) c.add(l.phase);
  for (const auto& p : powers_) c.add(p);
  return c;
}

OpticalModel OpticalModel::from_checkpoint(const Checkpoint& c) {
  if (c.geometry.size() != 8) throw FormatError("optical checkpoint geometry block has wrong length");
  Geometry g{c.geometry[0], c.geometry[1], c.geometry[2], c.geometry[3], c.geometry[4]};
  OpticalModel m;
  if (c.kind == ModelKind::lff) {
    const auto radius = static_cast<std::size_t>(c.geometry[6]);
    m = c.geometry[7] != 0.0 ? OpticalModel{} : make_lff(c.grid, radius, g.pitch, g.wavelength, 0);
    if (c.geometry[7] != 0.0) {
      m.kind_ = OpticsKind::lff;
      m.grid_ = c.grid;
      m.filter_.emplace(FourierFilter::full_band(c.grid));
    }
    m.geometry_ = g;
    c.restore(m.filter_->re);
    c.restore(m.filter_->im);
  } else if (c.kind == ModelKind::d2nn) {
    m = make_d2nn(c.grid, static_cast<std::size_t>(c.geometry[5]), g);
    for (auto& l : m.layers_) c.restore(l.phase);
    for (auto& p : m.powers_) c.restore(p);
  } else {
    throw FormatError("checkpoint does not hold an optical model");
  }
  return m;
}

ComplexField d2nn_forward(const ComplexField& f, const OpticalModel& model, std::size_t upto) {
  if (model.kind() != OpticsKind::d2nn) throw std::invalid_argument("d2nn_forward needs a diffractive model");
  if (upto < 1 || upto > model.layer_count())
    throw std::out_of_range("layer index " + std::to_string(upto) + " outside [1, " +
                            std::to_string(model.layer_count()) + "]");
  const Geometry& g = model.geometry();
  ComplexField z = angular_spectrum_propagate(f, g.input_distance);
  for (std::size_t k = 0; k < upto; ++k) {
    const auto& ph = model.layer(k).phase.value;
    for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] *= std::polar(1.0, ph[i]);
    z = angular_spectrum_propagate(z, k + 1 == upto ? g.detector_distance : g.layer_distance);
  }
  const double p = model.power(upto - 1);
  for (auto& v : z.data()) v *= p;
  return z;
}

}  // namespace cqpm::optics
