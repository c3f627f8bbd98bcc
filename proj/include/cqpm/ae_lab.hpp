#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cqpm/data.hpp"
#include "cqpm/decoder.hpp"

namespace cqpm::ae {

struct StudyConfig {
  data::DatasetKind kind = data::DatasetKind::synthetic_digits;
  std::size_t image_side = 8;  // input dimension is side^2
  std::vector<std::size_t> latent_dims{4};
  std::size_t hidden = 64;
  std::size_t train_count = 400;
  std::size_t test_count = 100;
  std::size_t epochs = 150;
  std::size_t batch_size = 32;
  double lr = 3e-3;
  std::uint64_t seed = 11;
  double on_par_factor = 1.5;
};

// A real [N, D] sample matrix; complex configurations see exp(j*2pi*x).
struct Samples {
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<double> values;
};

Samples make_samples(const StudyConfig& cfg, std::size_t first_index, std::size_t count);

struct FitResult {
  double train_mse = 0.0;
  double test_mse = 0.0;
  std::uint64_t order_checksum = 0;  // hash of the batch order actually used
  std::vector<double> test_reconstruction;  // first test sample
};

// Trains `model` with Adam on MSE. Complex encoders receive phase-encoded fields;
// the reconstruction target is always the real sample.
FitResult fit(Autoencoder& model, const Samples& train, const Samples& test, std::size_t epochs,
              std::size_t batch_size, double lr, std::uint64_t seed);
double mse(Autoencoder& model, const Samples& s);

struct StudyRow {
  std::string config;  // e.g. "LE+NLD"
  std::size_t latent_dim = 0;
  double train_mse = 0.0;
  double test_mse = 0.0;
  double wall_time = 0.0;  // seconds
  std::uint64_t order_checksum = 0;
  std::vector<double> sample;
};

struct StudyReport {
  std::vector<StudyRow> rows;
  double on_par_factor = 1.5;

  const StudyRow& find(const std::string& config, std::size_t latent) const;
  // test MSE of `a` <= factor * test MSE of `b` at the given latent size.
  bool on_par(const std::string& a, const std::string& b, std::size_t latent) const;
  // config, latent_dim, train_mse, test_mse, wall_time
  void write_csv(std::ostream& os) const;
};

// The five configurations: LE+LD, LE+NLD, NLE+NLD on intensity samples and
// CLE+NLD, CNLE+NLD on phase-encoded samples.
std::vector<AEConfig> study_configs(std::size_t input_dim, std::size_t latent, std::size_t hidden, std::uint64_t seed);

StudyReport run_ae_study(const StudyConfig& cfg);

}  // namespace cqpm::ae
