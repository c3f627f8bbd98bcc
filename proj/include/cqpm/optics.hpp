#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cqpm/autodiff.hpp"
#include "cqpm/checkpoint.hpp"
#include "cqpm/field.hpp"

namespace cqpm::optics {

// Free-space layout of a diffractive stack. Distances in meters.
struct Geometry {
  double wavelength = 632.8e-9;
  double pitch = 316.4e-9;
  double input_distance = 3.373e-6;
  double layer_distance = 3.373e-6;
  double detector_distance = 5.904e-6;
};

// 632.8 nm illumination, lambda/2 neurons, 3.373 um spacing, 5.904 um to the detector.
Geometry full_geometry();
// Paper geometry with distances scaled by side/256.
Geometry scaled_geometry(std::size_t side);

// Band-limited angular-spectrum transfer function in FFT bin order;
// evanescent bins are zero.
CTensor transfer_function(std::size_t rows, std::size_t cols, double pitch, double wavelength,
                          double distance);

ComplexField angular_spectrum_propagate(const ComplexField& f, double distance);
// z: [..., H, W] complex. distance == 0 returns z unchanged.
Var propagate(Var z, double pitch, double wavelength, double distance);

// Circular learnable transmission mask in the Fourier plane of a 4-f relay.
// Coefficients live on a 2R x 2R grid centered on DC; bins outside the disk
// of radius R are held at zero.
class FourierFilter {
 public:
  FourierFilter(std::size_t grid, std::size_t radius, std::uint64_t seed);
  // Square support covering every bin of a grid x grid spectrum, all ones.
  static FourierFilter full_band(std::size_t grid);

  std::size_t grid() const { return grid_; }
  std::size_t radius() const { return radius_; }
  bool is_full_band() const { return full_band_; }
  const std::vector<double>& mask() const { return re.mask; }

  void set_uniform(cd value);
  // grid x grid spectrum in FFT bin order.
  CTensor spectrum() const;
  Var spectrum(Tape& tape);

  Parameter re;
  Parameter im;

 private:
  FourierFilter(std::size_t grid, std::size_t radius, bool full_band);
  std::size_t grid_, radius_;
  bool full_band_;
};

ComplexField lff_forward(const ComplexField& f, const FourierFilter& filter);
Var lff_forward(Var z, FourierFilter& filter);

struct DiffractiveLayer {
  Parameter phase;  // radians, H x W
  double distance_to_next = 0.0;
};

enum class OpticsKind { lff, d2nn };

class OpticalModel {
 public:
  static OpticalModel make_lff(std::size_t grid, std::size_t radius, double pitch, double wavelength,
                               std::uint64_t seed);
  static OpticalModel make_d2nn(std::size_t grid, std::size_t layers, const Geometry& geometry);

  OpticsKind kind() const { return kind_; }
  std::size_t grid() const { return grid_; }
  std::size_t layer_count() const { return layers_.size(); }
  const Geometry& geometry() const { return geometry_; }

  FourierFilter& filter() { return *filter_; }
  const FourierFilter& filter() const { return *filter_; }
  DiffractiveLayer& layer(std::size_t i) { return layers_.at(i); }
  const DiffractiveLayer& layer(std::size_t i) const { return layers_.at(i); }
  // Log-parameterized power scalar: P_i = exp(raw). Index is 0-based.
  Parameter& power_raw(std::size_t i) { return powers_.at(i); }
  double power(std::size_t i) const;

  // Output field of layer `upto` (1-based, 0 = last) scaled by its power.
  // For LFF the filter output is returned and `upto` is ignored.
  Var forward_field(Var input, std::size_t upto = 0);
  Var forward_intensity(Var input, std::size_t upto = 0);

  std::vector<Parameter*> parameters();
  void set_trainable(bool trainable);

  Checkpoint to_checkpoint() const;
  static OpticalModel from_checkpoint(const Checkpoint& c);

 private:
  OpticalModel() = default;
  OpticsKind kind_ = OpticsKind::lff;
  std::size_t grid_ = 0;
  Geometry geometry_;
  std::optional<FourierFilter> filter_;
  std::vector<DiffractiveLayer> layers_;
  std::vector<Parameter> powers_;
};

// Field-level evaluation of the diffractive stack up to layer `upto` (1-based).
ComplexField d2nn_forward(const ComplexField& f, const OpticalModel& model, std::size_t upto);

}  // namespace cqpm::optics
