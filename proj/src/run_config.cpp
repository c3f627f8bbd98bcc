#include <cmath>

#include "cqpm/training.hpp"

namespace cqpm::training {

namespace {

void read_stage(const KeyValueFile& kv, const std::string& p, StageConfig& s) {
  kv.read(p + ".epochs", s.epochs);
  kv.read(p + ".batch_size", s.batch_size);
  kv.read(p + ".lr", s.lr);
  kv.read(p + ".milestones", s.milestones);
  kv.read(p + ".gamma", s.gamma);
}

void write_stage(KeyValueFile& kv, const std::string& p, const StageConfig& s) {
  kv.set(p + ".epochs", std::uint64_t{s.epochs});
  kv.set(p + ".batch_size", std::uint64_t{s.batch_size});
  kv.set(p + ".lr", s.lr);
  kv.set(p + ".milestones", s.milestones);
  kv.set(p + ".gamma", s.gamma);
}

const char* gradient_name(detector::NoiseGradient g) {
  return g == detector::NoiseGradient::straight_through ? "straight-through" : "reparameterized";
}

}  // namespace

RunConfig RunConfig::desk() {
  RunConfig c;
  c.profile = "desk";
  c.dataset.side = 32;
  c.dataset.train_count = 500;
  c.dataset.test_count = 100;
  c.lff_radius = 16;
  c.decoder.width = 16;
  c.decoder.low_res_blocks = 1;
  // Epoch counts are a tenth of the full profile; milestones scale alike.
  c.stage1 = {150, 32, 0.1, {5, 40, 65, 100, 140}, 0.1};
  c.s1_phase_a = {150, 32, 1e-3, {}, 0.1};
  c.s1_joint_lr = 5e-5;
  c.stage2 = {40, 32, 2e-3, {20, 32, 36, 38}, 0.5};
  c.stage3 = {6, 32, 5e-5, {}, 0.1};
  c.phasesr = c.stage2;
  return c;
}

RunConfig RunConfig::full() {
  RunConfig c;
  c.profile = "full";
  c.dataset.side = 256;
  c.dataset.full_side = 789;
  c.lff_radius = 128;
  c.full_geometry = true;
  c.decoder.width = 64;
  c.decoder.low_res_blocks = 4;
  c.stage1 = {1500, 32, 0.1, {50, 400, 650, 1000, 1400}, 0.1};
  c.s1_phase_a = {1500, 32, 1e-3, {}, 0.1};
  c.s1_joint_lr = 5e-5;
  c.stage2 = {1500, 32, 2e-4, {750, 1200, 1350, 1425}, 0.5};
  c.stage3 = {24000, 32, 5e-6, {}, 0.1};
  c.phasesr = c.stage2;
  return c;
}

RunConfig RunConfig::from_kv(const KeyValueFile& kv) {
  std::string profile = "desk";
  kv.read("profile", profile);
  RunConfig c;
  if (profile == "desk") c = desk();
  else if (profile == "full") c = full();
  else throw ConfigError("unknown profile '" + profile + "' (expected desk or full)");

  kv.read("seed", c.seed);
  c.dataset.read(kv, "dataset.");
  kv.read("optics.kind", c.optics);
  if (c.optics != "lff" && c.optics != "d2nn") throw ConfigError("optics.kind must be lff or d2nn");
  kv.read("optics.lff_radius", c.lff_radius);
  kv.read("optics.d2nn_layers", c.d2nn_layers);
  kv.read("optics.full_geometry", c.full_geometry);
  if (c.optics == "d2nn" && c.profile == "full" && !kv.has("stage3.epochs")) c.stage3.epochs = 3000;

  kv.read("detector.compression", c.detector.compression);
  kv.read("detector.max_photon_count", c.detector.max_photon_count);
  kv.read("detector.read_noise_sigma", c.detector.read_noise_sigma);
  kv.read("detector.noise_enabled", c.detector.noise_enabled);
  kv.read("detector.rng_seed", c.detector.rng_seed);
  if (kv.has("detector.gradient")) {
    const std::string g = kv.get_string("detector.gradient");
    if (g == "straight-through") c.detector.gradient = detector::NoiseGradient::straight_through;
    else if (g == "reparameterized") c.detector.gradient = detector::NoiseGradient::reparameterized;
    else throw ConfigError("detector.gradient must be straight-through or reparameterized");
  }
  c.detector.validate();

  kv.read("decoder.width", c.decoder.width);
  kv.read("decoder.low_res_blocks", c.decoder.low_res_blocks);
  kv.read("decoder.seed", c.decoder.seed);
  kv.read("discriminator.width", c.discriminator_width);
  kv.read("loss.l1", c.weights.l1);
  kv.read("loss.perceptual", c.weights.perceptual);
  kv.read("loss.adversarial", c.weights.adversarial);
  kv.read("loss.perceptual_features", c.perceptual_features);

  read_stage(kv, "stage1", c.stage1);
  read_stage(kv, "s1", c.s1_phase_a);
  kv.read("s1.joint_lr", c.s1_joint_lr);
  read_stage(kv, "stage2", c.stage2);
  read_stage(kv, "stage3", c.stage3);
  read_stage(kv, "phasesr", c.phasesr);

  const auto unknown = kv.unread_keys();
  if (!unknown.empty()) throw ConfigError("unknown config field '" + unknown.front() + "'");
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) { return from_kv(KeyValueFile::load(path)); }

KeyValueFile RunConfig::to_kv() const {
  KeyValueFile kv;
  kv.set("profile", profile);
  kv.set("seed", std::uint64_t{seed});
  dataset.write(kv, "dataset.");
  kv.set("optics.kind", optics);
  kv.set("optics.lff_radius", std::uint64_t{lff_radius});
  kv.set("optics.d2nn_layers", std::uint64_t{d2nn_layers});
  kv.set("optics.full_geometry", std::string(full_geometry ? "true" : "false"));
  kv.set("detector.compression", std::uint64_t{detector.compression});
  kv.set("detector.max_photon_count", detector.max_photon_count);
  kv.set("detector.read_noise_sigma", detector.read_noise_sigma);
  kv.set("detector.noise_enabled", std::string(detector.noise_enabled ? "true" : "false"));
  kv.set("detector.rng_seed", std::uint64_t{detector.rng_seed});
  kv.set("detector.gradient", std::string(gradient_name(detector.gradient)));
  kv.set("decoder.width", std::uint64_t{decoder.width});
  kv.set("decoder.low_res_blocks", std::uint64_t{decoder.low_res_blocks});
  kv.set("decoder.seed", std::uint64_t{decoder.seed});
  kv.set("discriminator.width", std::uint64_t{discriminator_width});
  kv.set("loss.l1", weights.l1);
  kv.set("loss.perceptual", weights.perceptual);
  kv.set("loss.adversarial", weights.adversarial);
  kv.set("loss.perceptual_features", std::string(perceptual_features ? "true" : "false"));
  write_stage(kv, "stage1", stage1);
  write_stage(kv, "s1", s1_phase_a);
  kv.set("s1.joint_lr", s1_joint_lr);
  write_stage(kv, "stage2", stage2);
  write_stage(kv, "stage3", stage3);
  write_stage(kv, "phasesr", phasesr);
  return kv;
}

optics::OpticalModel RunConfig::make_optics() const {
  const optics::Geometry g = full_geometry ? optics::full_geometry() : optics::scaled_geometry(dataset.side);
  if (optics == "d2nn") return optics::OpticalModel::make_d2nn(dataset.side, d2nn_layers, g);
  return optics::OpticalModel::make_lff(dataset.side, lff_radius, g.pitch, g.wavelength, splitmix64(seed ^ 0x1ffu));
}

DecoderNet RunConfig::make_decoder() const {
  DecoderConfig d = decoder;
  d.compression = detector.compression;
  d.input_side = dataset.side >> detector::pool_levels(detector.compression);
  return DecoderNet(d);
}

Discriminator RunConfig::make_discriminator() const {
  return Discriminator(splitmix64(seed ^ 0xd15cu), discriminator_width);
}

detector::DetectorConfig RunConfig::detector_for_training() const {
  detector::DetectorConfig d = detector;
  if (d.rng_seed == 0) d.rng_seed = splitmix64(seed ^ 0xde7ecu);
  return d;
}

}  // namespace cqpm::training
