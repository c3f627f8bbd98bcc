#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cqpm/autodiff.hpp"
#include "cqpm/config.hpp"
#include "cqpm/data.hpp"
#include "cqpm/decoder.hpp"
#include "cqpm/detector.hpp"
#include "cqpm/losses.hpp"
#include "cqpm/optics.hpp"

namespace cqpm::training {

class Adam {
 public:
  Adam(std::vector<Parameter*> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // Updates trainable parameters from their gradients, then reapplies masks.
  void step();
  // Drops moment estimates and the step count.
  void reset();
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  std::size_t steps() const { return steps_; }
  // Steps taken while every gradient was exactly zero.
  std::size_t zero_grad_steps() const { return zero_grad_steps_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  std::vector<Parameter*> params_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t steps_ = 0;
  std::size_t zero_grad_steps_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// base * gamma^(number of milestones <= epoch).
double multistep_lr(double base, const std::vector<std::size_t>& milestones, double gamma, std::size_t epoch);

struct StageConfig {
  std::size_t epochs = 0;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::vector<std::size_t> milestones;
  double gamma = 0.1;

  double lr_at(std::size_t epoch) const { return multistep_lr(lr, milestones, gamma, epoch); }
};

struct RunConfig {
  std::string profile = "desk";
  std::uint64_t seed = 1;
  data::DatasetSpec dataset;

  // Optics.
  std::string optics = "lff";  // lff | d2nn
  std::size_t lff_radius = 16;
  std::size_t d2nn_layers = 2;
  bool full_geometry = false;  // otherwise distances scale with the grid

  detector::DetectorConfig detector;
  DecoderConfig decoder;
  std::size_t discriminator_width = 8;
  losses::CompositeWeights weights;
  bool perceptual_features = false;

  StageConfig stage1;        // LFF direct path
  StageConfig s1_phase_a;    // layer-wise schedule, single-layer phases
  double s1_joint_lr = 5e-5; // layer-wise schedule, joint phases
  StageConfig stage2;
  StageConfig stage3;
  StageConfig phasesr;

  static RunConfig desk();
  static RunConfig full();
  // Starts from the profile named by `profile` (default desk) and overrides
  // every present key. Unknown keys raise ConfigError.
  static RunConfig from_kv(const KeyValueFile& kv);
  static RunConfig load(const std::filesystem::path& path);
  KeyValueFile to_kv() const;

  optics::OpticalModel make_optics() const;
  DecoderNet make_decoder() const;
  Discriminator make_discriminator() const;
  detector::DetectorConfig detector_for_training() const;
};

struct TrainReport {
  std::vector<double> loss_history;       // one entry per optimizer step
  std::vector<double> epoch_lr;           // lr used in each epoch
  std::vector<double> validation_history; // one entry per epoch
  std::size_t steps_per_epoch = 0;
  std::size_t best_epoch = 0;
  double initial_validation = 0.0;  // before any update
  double best_validation = 0.0;
  double initial_loss = 0.0;  // train objective before any update
  double final_loss = 0.0;    // train objective of the returned parameters
};

// Phase images as a complex input field exp(j*phi), [N, H, W].
Var input_field(Tape& tape, const std::vector<const RealGrid*>& batch);
// phi / 2pi, [N, H, W] or [N, 1, H, W] when `channel`.
Var normalized_target(Tape& tape, const std::vector<const RealGrid*>& batch, bool channel);

// Mean phase reconstruction loss of the optical output at layer `upto` over a set.
double optical_loss(optics::OpticalModel& model, const std::vector<RealGrid>& set, std::size_t upto = 0);

TrainReport stage1_optical(optics::OpticalModel& model, const data::Dataset& ds, const StageConfig& cfg,
                           std::uint64_t seed);

struct S1LogEntry {
  std::size_t layer = 0;  // 1-based i
  char phase = 'A';
  std::vector<std::string> trainable;
  std::size_t optimizer_inits = 0;  // running count of optimizer constructions
  double loss = 0.0;                // train phase reconstruction loss at layer i after the phase
};

struct S1Report {
  std::vector<S1LogEntry> log;
  std::vector<TrainReport> phases;
  double loss_after_a1 = 0.0;
  double final_loss = 0.0;
};

// Optional observer invoked before and after every phase.
using S1Observer = std::function<void(const S1LogEntry&, bool after, optics::OpticalModel&)>;

S1Report algorithm_s1(optics::OpticalModel& model, const data::Dataset& ds, const StageConfig& phase_cfg,
                      double joint_lr, std::uint64_t seed, const S1Observer& observer = {});

struct PipelineState {
  optics::OpticalModel* optics = nullptr;  // null for PhaseSR
  DecoderNet* decoder = nullptr;
  detector::DetectorConfig detector;
};

// Decoder input for a batch: detect(demagnify(|H_O(x)|^2)), or the pooled
// normalized phase when the state has no optics. [N, 1, s, s].
Var sensor_image(const PipelineState& st, Tape& tape, const std::vector<const RealGrid*>& batch,
                 std::span<const std::uint64_t> keys);

struct Stage2Options {
  losses::CompositeWeights weights;
  Discriminator* discriminator = nullptr;  // adversarial term skipped when null
  losses::RandomFeatures* perceptual = nullptr;
};

TrainReport stage2_decoder(PipelineState st, const data::Dataset& ds, const StageConfig& cfg,
                           const Stage2Options& opt, std::uint64_t seed);

struct Stage3Report {
  TrainReport train;
  double ssim_before = 0.0;  // validation SSIM
  double ssim_after = 0.0;
};

Stage3Report stage3_finetune(PipelineState st, const data::Dataset& ds, const StageConfig& cfg, std::uint64_t seed);

TrainReport phasesr_baseline(DecoderNet& decoder, const data::Dataset& ds, const StageConfig& cfg,
                             const Stage2Options& opt, std::uint64_t seed);

struct Metrics {
  double psnr = 0.0;
  double ssim = 0.0;
};

std::vector<RealGrid> reconstruct(const PipelineState& st, const std::vector<RealGrid>& set,
                                  std::uint64_t key_offset = 1u << 30);
Metrics evaluate(const PipelineState& st, const std::vector<RealGrid>& set);
// Full fields reconstructed patch by patch and tiled.
Metrics evaluate_full(const PipelineState& st, const std::vector<RealGrid>& full, std::size_t patch_side);
std::vector<RealGrid> reconstruct_full(const PipelineState& st, const std::vector<RealGrid>& full,
                                       std::size_t patch_side);

// |A_out|^2 clamped to [0, 1] compared with phi / 2pi.
Metrics all_optical_baseline(optics::OpticalModel& model, const std::vector<RealGrid>& set);
// Bilinear upsampling of the compressed sensor image.
Metrics bilinear_baseline(const PipelineState& st, const std::vector<RealGrid>& set);

Metrics mean_metrics(const std::vector<RealGrid>& recon, const std::vector<RealGrid>& phase);

}  // namespace cqpm::training
