#include "cqpm/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "cqpm/field.hpp"

namespace cqpm {

namespace {
constexpr char kMagic[8] = {'O', 'P', 'T', 'M', '0', '0', '0', '1'};
}

const NamedTensor& Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw FormatError("checkpoint has no tensor named '" + name + "'");
}

void Checkpoint::add(const Parameter& p) { tensors.push_back({p.name, p.shape, p.value}); }

void Checkpoint::restore(Parameter& p) const {
  const auto& t = find(p.name);
  if (t.shape != p.shape)
    throw FormatError("checkpoint tensor '" + p.name + "' has shape " + shape_str(t.shape) + ", expected " +
                      shape_str(p.shape));
  p.value = t.data;
  p.grad.assign(p.value.size(), 0.0);
}

void write_checkpoint(std::ostream& os, const Checkpoint& c) {
  io::put_bytes(os, kMagic, 8);
  io::put_u32(os, static_cast<std::uint32_t>(c.kind));
  io::put_u32(os, c.grid);
  io::put_u32(os, static_cast<std::uint32_t>(c.geometry.size()));
  for (double g : c.geometry) io::put_f64(os, g);
  io::put_u32(os, static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& t : c.tensors) {
    io::put_u32(os, static_cast<std::uint32_t>(t.name.size()));
    io::put_bytes(os, t.name.data(), t.name.size());
    io::put_u32(os, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) io::put_u32(os, static_cast<std::uint32_t>(d));
    const std::size_t cols = t.shape.empty() ? 1 : t.shape.back();
    const std::size_t rows = cols == 0 ? 0 : t.data.size() / cols;
    write_grid(os, RealGrid(rows, cols, Role::raw, t.data));
  }
}

Checkpoint read_checkpoint(std::istream& is) {
  char magic[8];
  io::get_bytes(is, magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw FormatError("bad magic for OPTM1 checkpoint");
  Checkpoint c;
  c.kind = static_cast<ModelKind>(io::get_u32(is));
  c.grid = io::get_u32(is);
  c.geometry.resize(io::get_u32(is));
  for (auto& g : c.geometry) g = io::get_f64(is);
  const std::uint32_t count = io::get_u32(is);
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    t.name.resize(io::get_u32(is));
    io::get_bytes(is, t.name.data(), t.name.size());
    t.shape.resize(io::get_u32(is));
    for (auto& d : t.shape) d = io::get_u32(is);
    RealGrid g = read_grid(is);
    if (g.size() != numel(t.shape)) throw FormatError("tensor '" + t.name + "' size does not match its shape");
    t.data = std::move(g.data);
    c.tensors.push_back(std::move(t));
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_checkpoint(os, c);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_checkpoint(is);
}

}  // namespace cqpm
