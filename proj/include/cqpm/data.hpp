#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cqpm/config.hpp"
#include "cqpm/field.hpp"

namespace cqpm::data {

enum class DatasetKind { synthetic_blobs, synthetic_digits, imported };

const char* kind_name(DatasetKind k);
DatasetKind parse_kind(const std::string& s);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::synthetic_blobs;
  std::size_t side = 32;  // patch side
  std::size_t train_count = 500;
  std::size_t test_count = 100;
  std::size_t full_fov_count = 4;  // test full fields of view
  std::size_t full_side = 80;
  std::uint64_t seed = 7;
  double validation_fraction = 0.1;

  // Imported data: physical resampling onto the target pixel pitch.
  std::size_t source_side = 2304;
  double magnification = 60.0;
  double camera_pixel = 6.5e-6;
  double target_pitch = 316.4e-9;
  std::filesystem::path source_dir;

  void read(const KeyValueFile& kv, const std::string& prefix = "dataset.");
  void write(KeyValueFile& kv, const std::string& prefix = "dataset.") const;
};

// Deterministic phase sample in [0, 2pi]. `index` selects the sample; splits
// use disjoint index ranges.
RealGrid synth_phase(const DatasetSpec& spec, std::size_t index, std::size_t side);
RealGrid synth_phase(const DatasetSpec& spec, std::size_t index);

// round(source_side * camera_pixel / (magnification * target_pitch)).
std::size_t imported_side(std::size_t source_side, double camera_pixel, double magnification,
                          double target_pitch);
RealGrid bilinear_resize(const RealGrid& in, std::size_t rows, std::size_t cols);
RealGrid preprocess_imported(const RealGrid& raw, const DatasetSpec& spec);

// Row-major non-overlapping patch origins along one axis; the last patch is
// shifted back to end at the border when the side is not divisible.
std::vector<std::size_t> patch_starts(std::size_t full, std::size_t patch);
std::vector<RealGrid> patch_extract(const RealGrid& full, std::size_t patch_side);
RealGrid tile_reconstruct(const std::vector<RealGrid>& patches, std::size_t full_rows, std::size_t full_cols);

struct Dataset {
  std::vector<RealGrid> train;
  std::vector<RealGrid> validation;
  std::vector<RealGrid> test;
  std::vector<RealGrid> test_full;
};

// Builds every split in memory; validation is the tail of the train range.
Dataset build(const DatasetSpec& spec);

// Directory layout: spec.txt, manifest.txt, {train,test,test_full}/{index:06}.bin (RGRD1).
void write_dataset(const std::filesystem::path& dir, const DatasetSpec& spec);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace cqpm::data
