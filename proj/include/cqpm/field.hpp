#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cqpm/tensor.hpp"

namespace cqpm {

class SizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool is_power_of_two(std::size_t n);

// Meaning of the values stored in a RealGrid. `raw` tags generic tensors
// stored in checkpoints.
enum class Role : std::uint8_t { intensity = 0, phase = 1, phase_normalized = 2, raw = 3 };

const char* role_name(Role r);

// H x W complex amplitudes with sampling metadata; x = A * exp(j*phi).
class ComplexField {
 public:
  ComplexField(std::size_t rows, std::size_t cols, double pixel_pitch, double wavelength,
               cd fill = {});
  ComplexField(std::size_t rows, std::size_t cols, double pixel_pitch, double wavelength,
               std::vector<cd> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  double pixel_pitch() const { return pitch_; }
  double wavelength() const { return wavelength_; }

  cd& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cd& at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::vector<cd>& data() { return data_; }
  const std::vector<cd>& data() const { return data_; }

  double energy() const;
  bool all_finite() const;

 private:
  std::size_t rows_, cols_;
  double pitch_, wavelength_;
  std::vector<cd> data_;
};

struct RealGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Role role = Role::raw;
  std::vector<double> data;

  RealGrid() = default;
  RealGrid(std::size_t r, std::size_t c, Role role_tag, double fill = 0.0)
      : rows(r), cols(c), role(role_tag), data(r * c, fill) {}
  RealGrid(std::size_t r, std::size_t c, Role role_tag, std::vector<double> d);

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::size_t size() const { return data.size(); }
  double mean() const;
};

enum class Direction { forward, inverse };

// Unitary 2-D DFT (1/sqrt(HW) in both directions). Both sides must be powers of two.
ComplexField fft2(const ComplexField& f, Direction dir);

RealGrid intensity(const ComplexField& f);

// A * exp(j*phi). Phases outside [0, 2pi) are wrapped and counted.
ComplexField from_phase(const RealGrid& phi, const RealGrid* amplitude, double pixel_pitch,
                        double wavelength);
ComplexField from_phase(const RealGrid& phi, double pixel_pitch, double wavelength);

// atan2 phase mapped into [0, 2pi).
RealGrid extract_phase(const ComplexField& f);

double wrap_phase(double phi);
std::uint64_t phase_wrap_count();
void reset_phase_wrap_count();

// CFLD1 / RGRD1 binary formats (little-endian).
void write_field(std::ostream& os, const ComplexField& f);
ComplexField read_field(std::istream& is);
void write_grid(std::ostream& os, const RealGrid& g);
RealGrid read_grid(std::istream& is);

void save_field(const std::filesystem::path& path, const ComplexField& f);
ComplexField load_field(const std::filesystem::path& path);
void save_grid(const std::filesystem::path& path, const RealGrid& g);
RealGrid load_grid(const std::filesystem::path& path);

namespace io {
void put_u32(std::ostream& os, std::uint32_t v);
void put_f64(std::ostream& os, double v);
std::uint32_t get_u32(std::istream& is);
double get_f64(std::istream& is);
void put_bytes(std::ostream& os, const void* p, std::size_t n);
void get_bytes(std::istream& is, void* p, std::size_t n);
}  // namespace io

}  // namespace cqpm
