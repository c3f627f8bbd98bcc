#include "cqpm/training.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

#include "cqpm/random.hpp"

namespace cqpm::training {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Batch = std::vector<const RealGrid*>;

std::vector<std::vector<double>> snapshot(const std::vector<Parameter*>& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back(p->value);
  return out;
}

void restore(const std::vector<Parameter*>& params, const std::vector<std::vector<double>>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  return idx;
}

std::uint64_t sample_key(std::uint64_t seed, std::size_t epoch, std::size_t index) {
  return splitmix64(seed ^ splitmix64((static_cast<std::uint64_t>(epoch) << 32) + index));
}

// Runs `fn(batch, keys)` over fixed-order chunks of `set`.
template <class Fn>
void for_chunks(const std::vector<RealGrid>& set, std::size_t chunk, std::uint64_t key_offset, Fn fn) {
  for (std::size_t start = 0; start < set.size(); start += chunk) {
    const std::size_t end = std::min(set.size(), start + chunk);
    Batch b;
    std::vector<std::uint64_t> keys;
    for (std::size_t i = start; i < end; ++i) {
      b.push_back(&set[i]);
      keys.push_back(key_offset + i);
    }
    fn(b, keys);
  }
}

struct LoopHooks {
  // Forward + backward on one batch; returns the batch loss.
  std::function<double(const Batch&, std::span<const std::uint64_t>)> step;
  // Lower is better.
  std::function<double()> validate;
  std::function<double()> train_objective;  // optional
  std::function<void()> after_step;         // optional
};

TrainReport run_loop(const std::vector<RealGrid>& train, const StageConfig& cfg, std::uint64_t seed,
                     std::vector<Parameter*> all_params, Adam& opt, const LoopHooks& hooks) {
  if (cfg.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  TrainReport rep;
  rep.steps_per_epoch = (train.size() + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<Parameter*> trainable;
  for (Parameter* p : all_params)
    if (p->trainable) trainable.push_back(p);

  if (hooks.train_objective) rep.initial_loss = hooks.train_objective();
  rep.best_validation = rep.initial_validation = hooks.validate();
  rep.best_epoch = 0;
  auto best = snapshot(trainable);

  Rng rng(splitmix64(seed));
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr_at(epoch);
    opt.set_lr(lr);
    rep.epoch_lr.push_back(lr);
    const auto order = permutation(train.size(), rng);
    for (std::size_t s = 0; s < rep.steps_per_epoch; ++s) {
      Batch b;
      std::vector<std::uint64_t> keys;
      for (std::size_t k = s * cfg.batch_size; k < std::min(train.size(), (s + 1) * cfg.batch_size); ++k) {
        b.push_back(&train[order[k]]);
        keys.push_back(sample_key(seed, epoch, order[k]));
      }
      for (Parameter* p : all_params) p->zero_grad();
      rep.loss_history.push_back(hooks.step(b, keys));
      opt.step();
      if (hooks.after_step) hooks.after_step();
    }
    const double v = hooks.validate();
    rep.validation_history.push_back(v);
    if (v < rep.best_validation) {
      rep.best_validation = v;
      rep.best_epoch = epoch + 1;
      best = snapshot(trainable);
    }
  }
  restore(trainable, best);
  if (hooks.train_objective) rep.final_loss = hooks.train_objective();
  return rep;
}

const std::vector<RealGrid>& validation_or_train(const data::Dataset& ds) {
  return ds.validation.empty() ? ds.train : ds.validation;
}

std::vector<std::string> trainable_names(optics::OpticalModel& model) {
  std::vector<std::string> out;
  for (Parameter* p : model.parameters())
    if (p->trainable) out.push_back(p->name);
  return out;
}

void require_frozen(optics::OpticalModel& model, const char* who) {
  for (Parameter* p : model.parameters())
    if (p->trainable)
      throw std::invalid_argument(std::string(who) + ": optical parameter '" + p->name +
                                  "' is trainable; freeze the optical model first");
}

std::vector<std::uint64_t> checksums(optics::OpticalModel& model) {
  std::vector<std::uint64_t> out;
  for (Parameter* p : model.parameters()) out.push_back(p->checksum());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(std::vector<Parameter*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  reset();
}

void Adam::reset() {
  steps_ = 0;
  m_.clear();
  v_.clear();
  for (const Parameter* p : params_) {
    m_.emplace_back(p->size(), 0.0);
    v_.emplace_back(p->size(), 0.0);
  }
}

void Adam::step() {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(beta1_, t);
  const double c2 = 1.0 - std::pow(beta2_, t);
  bool any = false;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    if (!p.trainable) continue;
    if (p.grad.size() != p.value.size()) p.grad.assign(p.value.size(), 0.0);
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      any = any || g != 0.0;
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      p.value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
    p.project();
  }
  if (!any) {
    if (zero_grad_steps_ == 0) std::clog << "adam: step with all-zero gradients\n";
    ++zero_grad_steps_;
  }
}

double multistep_lr(double base, const std::vector<std::size_t>& milestones, double gamma, std::size_t epoch) {
  double lr = base;
  for (std::size_t m : milestones)
    if (m <= epoch) lr *= gamma;
  return lr;
}

// ---------------------------------------------------------------------------
// Tape helpers

Var input_field(Tape& tape, const Batch& batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const std::size_t h = batch[0]->rows, w = batch[0]->cols;
  std::vector<cd> v;
  v.reserve(batch.size() * h * w);
  for (const RealGrid* g : batch) {
    if (g->rows != h || g->cols != w) throw SizeError("batch images differ in size");
    for (double phi : g->data) v.push_back(std::polar(1.0, phi));
  }
  return tape.constant(CTensor({batch.size(), h, w}, std::move(v)));
}

Var normalized_target(Tape& tape, const Batch& batch, bool channel) {
  const std::size_t h = batch[0]->rows, w = batch[0]->cols;
  std::vector<double> v;
  v.reserve(batch.size() * h * w);
  for (const RealGrid* g : batch)
    for (double phi : g->data) v.push_back(phi / kTwoPi);
  Shape s = channel ? Shape{batch.size(), 1, h, w} : Shape{batch.size(), h, w};
  return tape.constant(Tensor(s, std::move(v)));
}

double optical_loss(optics::OpticalModel& model, const std::vector<RealGrid>& set, std::size_t upto) {
  double acc = 0.0;
  for_chunks(set, 32, 0, [&](const Batch& b, std::span<const std::uint64_t>) {
    Tape tape;
    Var l = losses::phase_recon_loss(model.forward_intensity(input_field(tape, b), upto),
                                     normalized_target(tape, b, false));
    acc += l.item() * static_cast<double>(b.size());
  });
  return acc / static_cast<double>(set.size());
}

// ---------------------------------------------------------------------------
// Stage 1

TrainReport stage1_optical(optics::OpticalModel& model, const data::Dataset& ds, const StageConfig& cfg,
                           std::uint64_t seed) {
  if (model.kind() == optics::OpticsKind::d2nn)
    throw std::invalid_argument("PhaseD2NN models must be trained through algorithm_s1");
  model.set_trainable(true);
  const auto params = model.parameters();
  Adam opt(params, cfg.lr);
  LoopHooks hooks;
  hooks.step = [&](const Batch& b, std::span<const std::uint64_t>) {
    Tape tape;
    Var l = losses::phase_recon_loss(model.forward_intensity(input_field(tape, b)), normalized_target(tape, b, false));
    tape.backward(l);
    return l.item();
  };
  hooks.validate = [&] { return optical_loss(model, validation_or_train(ds)); };
  hooks.train_objective = [&] { return optical_loss(model, ds.train); };
  return run_loop(ds.train, cfg, seed, params, opt, hooks);
}

S1Report algorithm_s1(optics::OpticalModel& model, const data::Dataset& ds, const StageConfig& phase_cfg,
                      double joint_lr, std::uint64_t seed, const S1Observer& observer) {
  if (model.kind() != optics::OpticsKind::d2nn) throw std::invalid_argument("algorithm_s1 requires a PhaseD2NN model");
  const std::size_t n = model.layer_count();
  if (n == 0) throw std::invalid_argument("algorithm_s1 requires at least one layer");
  S1Report rep;
  std::size_t inits = 0;

  auto run_phase = [&](std::size_t i, char phase) {
    model.set_trainable(false);
    model.power_raw(i - 1).trainable = true;
    if (phase == 'A') {
      model.layer(i - 1).phase.trainable = true;
    } else {
      for (std::size_t k = 0; k < i; ++k) model.layer(k).phase.trainable = true;
    }
    S1LogEntry entry{i, phase, trainable_names(model), 0, 0.0};
    StageConfig cfg = phase_cfg;
    if (phase == 'B') {
      cfg.lr = joint_lr;
      cfg.milestones.clear();
    }
    // Fresh optimizer and schedule for every phase.
    const auto params = model.parameters();
    Adam opt(params, cfg.lr);
    entry.optimizer_inits = ++inits;
    if (observer) observer(entry, false, model);

    LoopHooks hooks;
    hooks.step = [&](const Batch& b, std::span<const std::uint64_t>) {
      Tape tape;
      Var l = losses::phase_recon_loss(model.forward_intensity(input_field(tape, b), i),
                                       normalized_target(tape, b, false));
      tape.backward(l);
      return l.item();
    };
    hooks.validate = [&] { return optical_loss(model, validation_or_train(ds), i); };
    hooks.train_objective = [&] { return optical_loss(model, ds.train, i); };
    const std::uint64_t phase_seed = splitmix64(seed + 2 * i + (phase == 'B' ? 1 : 0));
    rep.phases.push_back(run_loop(ds.train, cfg, phase_seed, params, opt, hooks));
    entry.loss = rep.phases.back().final_loss;
    rep.log.push_back(entry);
    if (observer) observer(entry, true, model);
  };

  run_phase(1, 'A');
  rep.loss_after_a1 = rep.log.back().loss;
  for (std::size_t i = 2; i <= n; ++i) {
    run_phase(i, 'A');
    run_phase(i, 'B');
  }
  rep.final_loss = rep.log.back().loss;
  model.set_trainable(false);
  return rep;
}

// ---------------------------------------------------------------------------
// Stages 2 and 3

Var sensor_image(const PipelineState& st, Tape& tape, const Batch& batch, std::span<const std::uint64_t> keys) {
  if (!st.optics) return detector::demagnify(normalized_target(tape, batch, true), st.detector.compression);
  Var i = st.optics->forward_intensity(input_field(tape, batch));
  return detector::detect(detector::demagnify(i, st.detector.compression), st.detector, keys);
}

namespace {

Var reconstruct_batch(const PipelineState& st, Tape& tape, const Batch& b, std::span<const std::uint64_t> keys) {
  return st.decoder->forward(sensor_image(st, tape, b, keys));
}

double mean_l1(const PipelineState& st, const std::vector<RealGrid>& set) {
  double acc = 0.0;
  for_chunks(set, 32, 1u << 30, [&](const Batch& b, std::span<const std::uint64_t> keys) {
    Tape tape;
    Var l = ad::l1_loss(reconstruct_batch(st, tape, b, keys), normalized_target(tape, b, true));
    acc += l.item() * static_cast<double>(b.size());
  });
  return acc / static_cast<double>(set.size());
}

TrainReport train_decoder(PipelineState st, const data::Dataset& ds, const StageConfig& cfg,
                          const Stage2Options& opt, std::uint64_t seed) {
  st.decoder->set_trainable(true);
  const auto params = st.decoder->parameters();
  Adam adam(params, cfg.lr);
  std::vector<Parameter*> dparams;
  if (opt.discriminator) dparams = opt.discriminator->parameters();
  Adam dadam(dparams, cfg.lr);
  std::vector<double> last_fake;
  Shape fake_shape;
  Batch last_batch;

  LoopHooks hooks;
  hooks.step = [&](const Batch& b, std::span<const std::uint64_t> keys) {
    Tape tape;
    Var out = reconstruct_batch(st, tape, b, keys);
    Var l = losses::composite_swin_loss(out, normalized_target(tape, b, true), opt.discriminator, opt.weights,
                                        opt.perceptual);
    tape.backward(l);
    last_fake = out.values();
    fake_shape = out.shape();
    last_batch = b;
    return l.item();
  };
  hooks.after_step = [&] {
    if (!opt.discriminator || opt.weights.adversarial == 0.0) return;
    for (Parameter* p : dparams) p->zero_grad();
    Tape tape;
    Var real = opt.discriminator->forward(normalized_target(tape, last_batch, true));
    Var fake = opt.discriminator->forward(tape.constant(Tensor(fake_shape, last_fake)));
    tape.backward(losses::discriminator_loss(real, fake));
    dadam.set_lr(adam.lr());
    dadam.step();
  };
  hooks.validate = [&] { return mean_l1(st, validation_or_train(ds)); };
  std::vector<Parameter*> all = params;
  all.insert(all.end(), dparams.begin(), dparams.end());
  return run_loop(ds.train, cfg, seed, all, adam, hooks);
}

}  // namespace

TrainReport stage2_decoder(PipelineState st, const data::Dataset& ds, const StageConfig& cfg,
                           const Stage2Options& opt, std::uint64_t seed) {
  if (!st.optics) throw std::invalid_argument("stage2_decoder needs an optical model");
  require_frozen(*st.optics, "stage2_decoder");
  const auto before = checksums(*st.optics);
  st.detector.noise_enabled = false;
  TrainReport rep = train_decoder(st, ds, cfg, opt, seed);
  if (checksums(*st.optics) != before) throw std::logic_error("stage2_decoder modified the optical model");
  return rep;
}

TrainReport phasesr_baseline(DecoderNet& decoder, const data::Dataset& ds, const StageConfig& cfg,
                             const Stage2Options& opt, std::uint64_t seed) {
  PipelineState st;
  st.decoder = &decoder;
  st.detector.compression = decoder.config().compression;
  return train_decoder(st, ds, cfg, opt, seed);
}

Stage3Report stage3_finetune(PipelineState st, const data::Dataset& ds, const StageConfig& cfg, std::uint64_t seed) {
  if (!st.optics || !st.decoder) throw std::invalid_argument("stage3_finetune needs optics and decoder");
  st.optics->set_trainable(true);
  st.decoder->set_trainable(true);
  auto params = st.optics->parameters();
  for (Parameter* p : st.decoder->parameters()) params.push_back(p);
  Adam opt(params, cfg.lr);
  const auto& val = validation_or_train(ds);
  Stage3Report rep;
  LoopHooks hooks;
  hooks.step = [&](const Batch& b, std::span<const std::uint64_t> keys) {
    Tape tape;
    Var l = losses::ssim_loss(reconstruct_batch(st, tape, b, keys), normalized_target(tape, b, true));
    tape.backward(l);
    return l.item();
  };
  hooks.validate = [&] { return -evaluate(st, val).ssim; };
  rep.train = run_loop(ds.train, cfg, seed, params, opt, hooks);
  rep.ssim_before = -rep.train.initial_validation;
  rep.ssim_after = -rep.train.best_validation;
  st.optics->set_trainable(false);
  return rep;
}

// ---------------------------------------------------------------------------
// Evaluation

std::vector<RealGrid> reconstruct(const PipelineState& st, const std::vector<RealGrid>& set,
                                  std::uint64_t key_offset) {
  std::vector<RealGrid> out;
  for_chunks(set, 32, key_offset, [&](const Batch& b, std::span<const std::uint64_t> keys) {
    Tape tape;
    Var r = reconstruct_batch(st, tape, b, keys);
    const std::size_t h = r.shape()[2], w = r.shape()[3];
    const auto& v = r.values();
    for (std::size_t n = 0; n < b.size(); ++n)
      out.emplace_back(h, w, Role::phase_normalized,
                       std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(n * h * w),
                                           v.begin() + static_cast<std::ptrdiff_t>((n + 1) * h * w)));
  });
  return out;
}

Metrics mean_metrics(const std::vector<RealGrid>& recon, const std::vector<RealGrid>& phase) {
  if (recon.size() != phase.size()) throw SizeError("metric sets differ in size");
  Metrics m;
  for (std::size_t i = 0; i < recon.size(); ++i) {
    RealGrid target(phase[i].rows, phase[i].cols, Role::phase_normalized);
    for (std::size_t k = 0; k < target.size(); ++k) target.data[k] = phase[i].data[k] / kTwoPi;
    m.psnr += losses::psnr(recon[i], target);
    m.ssim += losses::ssim(recon[i], target).mean;
  }
  m.psnr /= static_cast<double>(recon.size());
  m.ssim /= static_cast<double>(recon.size());
  return m;
}

Metrics evaluate(const PipelineState& st, const std::vector<RealGrid>& set) {
  return mean_metrics(reconstruct(st, set), set);
}

std::vector<RealGrid> reconstruct_full(const PipelineState& st, const std::vector<RealGrid>& full,
                                       std::size_t patch_side) {
  std::vector<RealGrid> out;
  for (std::size_t i = 0; i < full.size(); ++i) {
    const auto patches = data::patch_extract(full[i], patch_side);
    const auto rec = reconstruct(st, patches, (2ull << 30) + i * 4096);
    out.push_back(data::tile_reconstruct(rec, full[i].rows, full[i].cols));
  }
  return out;
}

Metrics evaluate_full(const PipelineState& st, const std::vector<RealGrid>& full, std::size_t patch_side) {
  return mean_metrics(reconstruct_full(st, full, patch_side), full);
}

Metrics all_optical_baseline(optics::OpticalModel& model, const std::vector<RealGrid>& set) {
  std::vector<RealGrid> out;
  for_chunks(set, 32, 0, [&](const Batch& b, std::span<const std::uint64_t>) {
    Tape tape;
    Var i = model.forward_intensity(input_field(tape, b));
    const std::size_t h = b[0]->rows, w = b[0]->cols;
    const auto& v = i.values();
    for (std::size_t n = 0; n < b.size(); ++n) {
      RealGrid g(h, w, Role::intensity);
      for (std::size_t k = 0; k < h * w; ++k) g.data[k] = std::clamp(v[n * h * w + k], 0.0, 1.0);
      out.push_back(std::move(g));
    }
  });
  return mean_metrics(out, set);
}

Metrics bilinear_baseline(const PipelineState& st, const std::vector<RealGrid>& set) {
  std::vector<RealGrid> out;
  for_chunks(set, 32, 1u << 30, [&](const Batch& b, std::span<const std::uint64_t> keys) {
    Tape tape;
    Var s = sensor_image(st, tape, b, keys);
    const std::size_t h = s.shape()[2], w = s.shape()[3];
    const auto& v = s.values();
    for (std::size_t n = 0; n < b.size(); ++n) {
      RealGrid g(h, w, Role::intensity,
                 std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(n * h * w),
                                     v.begin() + static_cast<std::ptrdiff_t>((n + 1) * h * w)));
      RealGrid up = data::bilinear_resize(g, b[n]->rows, b[n]->cols);
      for (double& x : up.data) x = std::clamp(x, 0.0, 1.0);
      out.push_back(std::move(up));
    }
  });
  return mean_metrics(out, set);
}

}  // namespace cqpm::training
