#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cqpm/autodiff.hpp"

namespace cqpm {

// OPTM1 container:
//   magic "OPTM0001"
//   u32 kind, u32 grid
//   u32 geometry count, f64 geometry values
//   u32 tensor count, then per tensor:
//     u32 name length, name bytes, u32 rank, u32 dims[rank],
//     one RGRD1 block (rows = product of leading dims, cols = last dim, role raw)
enum class ModelKind : std::uint32_t { lff = 1, d2nn = 2, decoder = 3, discriminator = 4, autoencoder = 5 };

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

struct Checkpoint {
  ModelKind kind = ModelKind::lff;
  std::uint32_t grid = 0;
  std::vector<double> geometry;
  std::vector<NamedTensor> tensors;

  const NamedTensor& find(const std::string& name) const;
  void add(const Parameter& p);
  // Copies a stored tensor into `p`; shapes must match.
  void restore(Parameter& p) const;
};

void write_checkpoint(std::ostream& os, const Checkpoint& c);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cqpm
