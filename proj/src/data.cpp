#include "cqpm/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "cqpm/random.hpp"

namespace cqpm::data {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Rng sample_rng(const DatasetSpec& spec, std::size_t index) {
  return Rng(splitmix64(spec.seed * 0x9e3779b97f4a7c15ull + index));
}

RealGrid blobs(const DatasetSpec& spec, std::size_t index, std::size_t side) {
  Rng rng = sample_rng(spec, index);
  const double scale = static_cast<double>(spec.side) / 32.0;
  const double area = static_cast<double>(side * side) / static_cast<double>(spec.side * spec.side);
  const auto base = static_cast<std::size_t>(3 + rng.index(6));  // 3..8 per patch area
  const auto count = std::max<std::size_t>(base, static_cast<std::size_t>(std::lround(static_cast<double>(base) * area)));
  RealGrid g(side, side, Role::phase);
  for (std::size_t b = 0; b < count; ++b) {
    const double cy = rng.uniform(0.0, static_cast<double>(side));
    const double cx = rng.uniform(0.0, static_cast<double>(side));
    const double sigma = rng.uniform(1.5, 5.0) * scale;
    const double amp = rng.uniform(0.3, 1.0);
    for (std::size_t r = 0; r < side; ++r)
      for (std::size_t c = 0; c < side; ++c) {
        const double dy = static_cast<double>(r) - cy, dx = static_cast<double>(c) - cx;
        g.at(r, c) += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      }
  }
  const double peak = *std::max_element(g.data.begin(), g.data.end());
  const double level = rng.uniform(0.7, 0.95) * kTwoPi;
  for (auto& v : g.data) v = peak > 0 ? std::clamp(level * v / peak, 0.0, kTwoPi) : 0.0;
  return g;
}

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax, vy = by - ay;
  const double t = std::clamp(((px - ax) * vx + (py - ay) * vy) / (vx * vx + vy * vy), 0.0, 1.0);
  const double dx = px - (ax + t * vx), dy = py - (ay + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

// Seven-segment glyph strokes rendered as a soft phase profile.
RealGrid digits(const DatasetSpec& spec, std::size_t index, std::size_t side) {
  static constexpr unsigned char kSegments[10] = {0x3f, 0x06, 0x5b, 0x4f, 0x66, 0x6d, 0x7d, 0x07, 0x7f, 0x6f};
  // a b c d e f g as (x0, y0, x1, y1) on a unit 1x2 box.
  static constexpr double kLines[7][4] = {{0, 0, 1, 0}, {1, 0, 1, 1}, {1, 1, 1, 2}, {0, 2, 1, 2},
                                          {0, 1, 0, 2}, {0, 0, 0, 1}, {0, 1, 1, 1}};
  Rng rng = sample_rng(spec, index);
  const std::size_t digit = rng.index(10);
  const double s = static_cast<double>(side);
  const double h = rng.uniform(0.55, 0.75) * s;
  const double w = h * rng.uniform(0.45, 0.6);
  const double x0 = rng.uniform(0.1 * s, s - w - 0.1 * s);
  const double y0 = rng.uniform(0.1 * s, s - h - 0.1 * s);
  const double thick = std::max(1.0, 0.07 * s);
  const double level = rng.uniform(0.7, 0.95) * kTwoPi;
  RealGrid g(side, side, Role::phase);
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c) {
      double best = 1e300;
      for (int k = 0; k < 7; ++k) {
        if (!(kSegments[digit] & (1u << k))) continue;
        const auto& L = kLines[k];
        best = std::min(best, segment_distance(static_cast<double>(c), static_cast<double>(r), x0 + L[0] * w,
                                               y0 + L[1] * h / 2, x0 + L[2] * w, y0 + L[3] * h / 2));
      }
      g.at(r, c) = level * std::clamp(1.0 - (best - thick) / thick, 0.0, 1.0);
    }
  return g;
}

std::string index_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu.bin", i);
  return buf;
}

std::uint32_t file_crc(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

}  // namespace

const char* kind_name(DatasetKind k) {
  switch (k) {
    case DatasetKind::synthetic_blobs: return "synthetic-blobs";
    case DatasetKind::synthetic_digits: return "synthetic-digits";
    case DatasetKind::imported: return "imported";
  }
  return "?";
}

DatasetKind parse_kind(const std::string& s) {
  if (s == "synthetic-blobs") return DatasetKind::synthetic_blobs;
  if (s == "synthetic-digits") return DatasetKind::synthetic_digits;
  if (s == "imported") return DatasetKind::imported;
  throw ConfigError("unknown dataset kind '" + s + "'");
}

void DatasetSpec::read(const KeyValueFile& kv, const std::string& p) {
  if (kv.has(p + "kind")) kind = parse_kind(kv.get_string(p + "kind"));
  kv.read(p + "side", side);
  kv.read(p + "train_count", train_count);
  kv.read(p + "test_count", test_count);
  kv.read(p + "full_fov_count", full_fov_count);
  kv.read(p + "full_side", full_side);
  kv.read(p + "seed", seed);
  kv.read(p + "validation_fraction", validation_fraction);
  kv.read(p + "source_side", source_side);
  kv.read(p + "magnification", magnification);
  kv.read(p + "camera_pixel", camera_pixel);
  kv.read(p + "target_pitch", target_pitch);
  if (kv.has(p + "source_dir")) source_dir = kv.get_string(p + "source_dir");
}

void DatasetSpec::write(KeyValueFile& kv, const std::string& p) const {
  kv.set(p + "kind", std::string(kind_name(kind)));
  kv.set(p + "side", std::uint64_t{side});
  kv.set(p + "train_count", std::uint64_t{train_count});
  kv.set(p + "test_count", std::uint64_t{test_count});
  kv.set(p + "full_fov_count", std::uint64_t{full_fov_count});
  kv.set(p + "full_side", std::uint64_t{full_side});
  kv.set(p + "seed", std::uint64_t{seed});
  kv.set(p + "validation_fraction", validation_fraction);
  kv.set(p + "source_side", std::uint64_t{source_side});
  kv.set(p + "magnification", magnification);
  kv.set(p + "camera_pixel", camera_pixel);
  kv.set(p + "target_pitch", target_pitch);
  if (!source_dir.empty()) kv.set(p + "source_dir", source_dir.string());
}

RealGrid synth_phase(const DatasetSpec& spec, std::size_t index, std::size_t side) {
  switch (spec.kind) {
    case DatasetKind::synthetic_blobs: return blobs(spec, index, side);
    case DatasetKind::synthetic_digits: return digits(spec, index, side);
    case DatasetKind::imported: break;
  }
  throw std::invalid_argument("imported datasets are read from disk, not synthesized");
}

RealGrid synth_phase(const DatasetSpec& spec, std::size_t index) { return synth_phase(spec, index, spec.side); }

std::size_t imported_side(std::size_t source_side, double camera_pixel, double magnification, double target_pitch) {
  if (!(magnification > 0.0)) throw std::invalid_argument("magnification must be positive");
  if (!(camera_pixel > 0.0) || !(target_pitch > 0.0)) throw std::invalid_argument("pixel sizes must be positive");
  const double physical = static_cast<double>(source_side) * camera_pixel / magnification;
  return static_cast<std::size_t>(std::llround(physical / target_pitch));
}

RealGrid bilinear_resize(const RealGrid& in, std::size_t rows, std::size_t cols) {
  if (rows == in.rows && cols == in.cols) return in;
  RealGrid out(rows, cols, in.role);
  // Align pixel centers (half-pixel convention).
  const double sy = static_cast<double>(in.rows) / static_cast<double>(rows);
  const double sx = static_cast<double>(in.cols) / static_cast<double>(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double y = std::clamp((static_cast<double>(r) + 0.5) * sy - 0.5, 0.0, static_cast<double>(in.rows - 1));
    const auto y0 = static_cast<std::size_t>(y);
    const std::size_t y1 = std::min(y0 + 1, in.rows - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = std::clamp((static_cast<double>(c) + 0.5) * sx - 0.5, 0.0, static_cast<double>(in.cols - 1));
      const auto x0 = static_cast<std::size_t>(x);
      const std::size_t x1 = std::min(x0 + 1, in.cols - 1);
      const double fx = x - static_cast<double>(x0);
      out.at(r, c) = (1 - fy) * ((1 - fx) * in.at(y0, x0) + fx * in.at(y0, x1)) +
                     fy * ((1 - fx) * in.at(y1, x0) + fx * in.at(y1, x1));
    }
  }
  return out;
}

RealGrid preprocess_imported(const RealGrid& raw, const DatasetSpec& spec) {
  const std::size_t side = imported_side(raw.rows, spec.camera_pixel, spec.magnification, spec.target_pitch);
  RealGrid out = bilinear_resize(raw, side, side);
  out.role = Role::phase;
  return out;
}

std::vector<std::size_t> patch_starts(std::size_t full, std::size_t patch) {
  if (patch == 0) throw std::invalid_argument("patch side must be positive");
  if (patch > full)
    throw SizeError("patch side " + std::to_string(patch) + " exceeds full side " + std::to_string(full));
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + patch <= full; s += patch) starts.push_back(s);
  if (starts.back() + patch < full) starts.push_back(full - patch);
  return starts;
}

std::vector<RealGrid> patch_extract(const RealGrid& full, std::size_t patch_side) {
  const auto rs = patch_starts(full.rows, patch_side);
  const auto cs = patch_starts(full.cols, patch_side);
  std::vector<RealGrid> out;
  out.reserve(rs.size() * cs.size());
  for (std::size_t r0 : rs)
    for (std::size_t c0 : cs) {
      RealGrid p(patch_side, patch_side, full.role);
      for (std::size_t r = 0; r < patch_side; ++r)
        for (std::size_t c = 0; c < patch_side; ++c) p.at(r, c) = full.at(r0 + r, c0 + c);
      out.push_back(std::move(p));
    }
  return out;
}

RealGrid tile_reconstruct(const std::vector<RealGrid>& patches, std::size_t full_rows, std::size_t full_cols) {
  if (patches.empty()) throw std::invalid_argument("no patches to tile");
  const std::size_t side = patches.front().rows;
  const auto rs = patch_starts(full_rows, side);
  const auto cs = patch_starts(full_cols, side);
  if (patches.size() != rs.size() * cs.size())
    throw SizeError("expected " + std::to_string(rs.size() * cs.size()) + " patches, got " +
                    std::to_string(patches.size()));
  RealGrid out(full_rows, full_cols, patches.front().role);
  std::size_t k = 0;
  for (std::size_t r0 : rs)
    for (std::size_t c0 : cs) {
      const RealGrid& p = patches[k++];
      if (p.rows != side || p.cols != side) throw SizeError("patches differ in size");
      for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) out.at(r0 + r, c0 + c) = p.at(r, c);
    }
  return out;
}

Dataset build(const DatasetSpec& spec) {
  Dataset d;
  const auto val = static_cast<std::size_t>(std::floor(static_cast<double>(spec.train_count) * spec.validation_fraction));
  const std::size_t fit = spec.train_count - val;
  for (std::size_t i = 0; i < spec.train_count; ++i)
    (i < fit ? d.train : d.validation).push_back(synth_phase(spec, i));
  for (std::size_t i = 0; i < spec.test_count; ++i) d.test.push_back(synth_phase(spec, spec.train_count + i));
  for (std::size_t i = 0; i < spec.full_fov_count; ++i)
    d.test_full.push_back(synth_phase(spec, spec.train_count + spec.test_count + i, spec.full_side));
  return d;
}

void write_dataset(const std::filesystem::path& dir, const DatasetSpec& spec) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  KeyValueFile kv;
  spec.write(kv, "");
  kv.save(dir / "spec.txt");

  std::vector<std::pair<std::string, std::vector<RealGrid>>> splits;
  if (spec.kind == DatasetKind::imported) {
    std::vector<RealGrid> full;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(spec.source_dir))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) full.push_back(preprocess_imported(load_grid(f), spec));
    const std::size_t n_test = std::min(spec.test_count, full.size());
    std::vector<RealGrid> train, test, test_full;
    for (std::size_t i = 0; i < full.size(); ++i) {
      const bool is_test = i >= full.size() - n_test;
      for (auto& p : patch_extract(full[i], spec.side)) (is_test ? test : train).push_back(std::move(p));
      if (is_test) test_full.push_back(full[i]);
    }
    splits = {{"train", std::move(train)}, {"test", std::move(test)}, {"test_full", std::move(test_full)}};
  } else {
    Dataset d = build(spec);
    std::vector<RealGrid> train = std::move(d.train);
    for (auto& v : d.validation) train.push_back(std::move(v));
    splits = {{"train", std::move(train)}, {"test", std::move(d.test)}, {"test_full", std::move(d.test_full)}};
  }

  std::ofstream manifest(dir / "manifest.txt");
  for (const auto& [name, grids] : splits) {
    fs::create_directories(dir / name);
    manifest << "split " << name << " " << grids.size() << "\n";
    for (std::size_t i = 0; i < grids.size(); ++i) {
      const fs::path p = dir / name / index_name(i);
      save_grid(p, grids[i]);
      char crc[16];
      std::snprintf(crc, sizeof(crc), "%08x", file_crc(p));
      manifest << "file " << name << "/" << index_name(i) << " " << crc << "\n";
    }
  }
}

Dataset read_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  DatasetSpec spec;
  spec.read(KeyValueFile::load(dir / "spec.txt"), "");
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw std::runtime_error("dataset at " + dir.string() + " has no manifest.txt");
  std::map<std::string, std::vector<RealGrid>> splits;
  std::string line;
  while (std::getline(manifest, line)) {
    std::istringstream ls(line);
    std::string tag, name, crc;
    ls >> tag >> name;
    if (tag != "file") continue;
    ls >> crc;
    const fs::path p = dir / name;
    char actual[16];
    std::snprintf(actual, sizeof(actual), "%08x", file_crc(p));
    if (crc != actual) throw FormatError("checksum mismatch for " + p.string());
    splits[name.substr(0, name.find('/'))].push_back(load_grid(p));
  }
  Dataset d;
  auto& train = splits["train"];
  const auto val = static_cast<std::size_t>(std::floor(static_cast<double>(train.size()) * spec.validation_fraction));
  const std::size_t fit = train.size() - val;
  for (std::size_t i = 0; i < train.size(); ++i) (i < fit ? d.train : d.validation).push_back(std::move(train[i]));
  d.test = std::move(splits["test"]);
  d.test_full = std::move(splits["test_full"]);
  return d;
}

}  // namespace cqpm::data
