#include "cqpm/field.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <string>

#include "cqpm/kernels.hpp"

namespace cqpm {

namespace {

constexpr char kFieldMagic[8] = {'C', 'F', 'L', 'D', '0', '0', '0', '1'};
constexpr char kGridMagic[8] = {'R', 'G', 'R', 'D', '0', '0', '0', '1'};

std::atomic<std::uint64_t> g_wraps{0};

void check_magic(std::istream& is, const char (&magic)[8], const char* what) {
  char buf[8];
  io::get_bytes(is, buf, 8);
  if (std::memcmp(buf, magic, 8) != 0) throw FormatError(std::string("bad magic for ") + what);
}

}  // namespace

namespace io {

void put_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void get_bytes(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n) throw FormatError("unexpected end of stream");
}

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(os, b, 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  get_bytes(is, b, 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  put_bytes(os, b, 8);
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  get_bytes(is, b, 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace io

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

const char* role_name(Role r) {
  switch (r) {
    case Role::intensity: return "intensity";
    case Role::phase: return "phase";
    case Role::phase_normalized: return "phase_normalized";
    case Role::raw: return "raw";
  }
  return "unknown";
}

ComplexField::ComplexField(std::size_t rows, std::size_t cols, double pixel_pitch, double wavelength,
                           cd fill)
    : ComplexField(rows, cols, pixel_pitch, wavelength, std::vector<cd>(rows * cols, fill)) {}

ComplexField::ComplexField(std::size_t rows, std::size_t cols, double pixel_pitch, double wavelength,
                           std::vector<cd> data)
    : rows_(rows), cols_(cols), pitch_(pixel_pitch), wavelength_(wavelength), data_(std::move(data)) {
  if (rows == 0 || cols == 0) throw SizeError("field must be non-empty");
  if (data_.size() != rows * cols) throw SizeError("field data does not match its dimensions");
  if (!(pixel_pitch > 0.0)) throw std::invalid_argument("pixel_pitch must be positive");
  if (!(wavelength > 0.0)) throw std::invalid_argument("wavelength must be positive");
}

double ComplexField::energy() const {
  double e = 0.0;
  for (const auto& z : data_) e += std::norm(z);
  return e;
}

bool ComplexField::all_finite() const {
  for (const auto& z : data_)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

RealGrid::RealGrid(std::size_t r, std::size_t c, Role role_tag, std::vector<double> d)
    : rows(r), cols(c), role(role_tag), data(std::move(d)) {
  if (data.size() != r * c) throw SizeError("grid data does not match its dimensions");
}

double RealGrid::mean() const {
  double s = 0.0;
  for (double v : data) s += v;
  return data.empty() ? 0.0 : s / static_cast<double>(data.size());
}

ComplexField fft2(const ComplexField& f, Direction dir) {
  if (!is_power_of_two(f.rows()) || !is_power_of_two(f.cols()))
    throw SizeError("fft2 requires power-of-two sides, got " + std::to_string(f.rows()) + "x" +
                    std::to_string(f.cols()));
  ComplexField out = f;
  kernels::fft2(out.data(), 1, f.rows(), f.cols(), dir == Direction::inverse);
  return out;
}

RealGrid intensity(const ComplexField& f) {
  RealGrid g(f.rows(), f.cols(), Role::intensity);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const cd z = f.data()[i];
    g.data[i] = z.real() * z.real() + z.imag() * z.imag();
  }
  return g;
}

double wrap_phase(double phi) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (phi >= 0.0 && phi < two_pi) return phi;
  g_wraps.fetch_add(1, std::memory_order_relaxed);
  double w = std::fmod(phi, two_pi);
  if (w < 0.0) w += two_pi;
  if (w >= two_pi) w = 0.0;
  return w;
}

std::uint64_t phase_wrap_count() { return g_wraps.load(); }
void reset_phase_wrap_count() { g_wraps.store(0); }

ComplexField from_phase(const RealGrid& phi, const RealGrid* amplitude, double pixel_pitch,
                        double wavelength) {
  if (amplitude && (amplitude->rows != phi.rows || amplitude->cols != phi.cols))
    throw SizeError("amplitude and phase grids differ in shape");
  ComplexField f(phi.rows, phi.cols, pixel_pitch, wavelength);
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double p = wrap_phase(phi.data[i]);
    const double a = amplitude ? amplitude->data[i] : 1.0;
    f.data()[i] = cd(a * std::cos(p), a * std::sin(p));
  }
  return f;
}

ComplexField from_phase(const RealGrid& phi, double pixel_pitch, double wavelength) {
  return from_phase(phi, nullptr, pixel_pitch, wavelength);
}

RealGrid extract_phase(const ComplexField& f) {
  RealGrid g(f.rows(), f.cols(), Role::phase);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double p = std::atan2(f.data()[i].imag(), f.data()[i].real());
    if (p < 0.0) p += two_pi;
    if (p >= two_pi) p -= two_pi;
    g.data[i] = p;
  }
  return g;
}

void write_field(std::ostream& os, const ComplexField& f) {
  io::put_bytes(os, kFieldMagic, 8);
  io::put_u32(os, static_cast<std::uint32_t>(f.rows()));
  io::put_u32(os, static_cast<std::uint32_t>(f.cols()));
  io::put_f64(os, f.pixel_pitch());
  io::put_f64(os, f.wavelength());
  for (const auto& z : f.data()) {
    io::put_f64(os, z.real());
    io::put_f64(os, z.imag());
  }
}

ComplexField read_field(std::istream& is) {
  check_magic(is, kFieldMagic, "CFLD1 field");
  const std::uint32_t rows = io::get_u32(is);
  const std::uint32_t cols = io::get_u32(is);
  const double pitch = io::get_f64(is);
  const double wl = io::get_f64(is);
  std::vector<cd> data(static_cast<std::size_t>(rows) * cols);
  for (auto& z : data) {
    const double re = io::get_f64(is);
    const double im = io::get_f64(is);
    z = cd(re, im);
  }
  return ComplexField(rows, cols, pitch, wl, std::move(data));
}

void write_grid(std::ostream& os, const RealGrid& g) {
  io::put_bytes(os, kGridMagic, 8);
  io::put_u32(os, static_cast<std::uint32_t>(g.rows));
  io::put_u32(os, static_cast<std::uint32_t>(g.cols));
  const auto tag = static_cast<std::uint8_t>(g.role);
  io::put_bytes(os, &tag, 1);
  for (double v : g.data) io::put_f64(os, v);
}

RealGrid read_grid(std::istream& is) {
  check_magic(is, kGridMagic, "RGRD1 grid");
  const std::uint32_t rows = io::get_u32(is);
  const std::uint32_t cols = io::get_u32(is);
  std::uint8_t tag = 0;
  io::get_bytes(is, &tag, 1);
  if (tag > static_cast<std::uint8_t>(Role::raw)) throw FormatError("unknown RGRD1 role tag");
  std::vector<double> data(static_cast<std::size_t>(rows) * cols);
  for (auto& v : data) v = io::get_f64(is);
  return RealGrid(rows, cols, static_cast<Role>(tag), std::move(data));
}

void save_field(const std::filesystem::path& path, const ComplexField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_field(os, f);
}

ComplexField load_field(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_field(is);
}

void save_grid(const std::filesystem::path& path, const RealGrid& g) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_grid(os, g);
}

RealGrid load_grid(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_grid(is);
}

}  // namespace cqpm
