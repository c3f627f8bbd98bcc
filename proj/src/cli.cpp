#include "cqpm/cli.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "cqpm/ae_lab.hpp"
#include "cqpm/checkpoint.hpp"
#include "cqpm/gradcheck_suite.hpp"
#include "cqpm/kernels.hpp"
#include "cqpm/training.hpp"

namespace cqpm::cli {

namespace fs = std::filesystem;
using training::RunConfig;

fs::path run_root() {
  const char* env = std::getenv("CQPM_RUN_ROOT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

RunLock::RunLock(const fs::path& dir) : path_(dir / ".lock") {
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) throw std::runtime_error("run directory " + dir.string() + " is locked by another process (" +
                                   path_.string() + ")");
  std::fprintf(f, "locked\n");
  std::fclose(f);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

namespace {

constexpr const char* kConfigEcho = "config.txt";
constexpr const char* kOptics = "optics.optm";
constexpr const char* kDecoder = "decoder.optm";
constexpr const char* kDiscriminator = "discriminator.optm";

struct Run {
  fs::path dir;
  RunConfig cfg;
};

data::Dataset load_data(const RunConfig& cfg, const std::string& data_dir) {
  if (!data_dir.empty()) return data::read_dataset(data_dir);
  if (cfg.dataset.kind == data::DatasetKind::imported)
    throw ConfigError("imported datasets need --data pointing at a directory written by `synth`");
  return data::build(cfg.dataset);
}

Run open_run(const std::string& dir_arg) {
  Run r;
  r.dir = dir_arg;
  if (r.dir.is_relative() && !fs::exists(r.dir)) r.dir = run_root() / r.dir;
  if (!fs::is_directory(r.dir)) throw std::runtime_error("run directory " + r.dir.string() + " does not exist");
  if (!fs::exists(r.dir / kConfigEcho))
    throw std::runtime_error("run directory " + r.dir.string() + " has no " + kConfigEcho);
  r.cfg = RunConfig::load(r.dir / kConfigEcho);
  return r;
}

optics::OpticalModel load_optics(const Run& r, bool required) {
  if (fs::exists(r.dir / kOptics)) return optics::OpticalModel::from_checkpoint(load_checkpoint(r.dir / kOptics));
  if (required) throw std::runtime_error("missing " + (r.dir / kOptics).string() + "; run stage 1 first");
  return r.cfg.make_optics();
}

DecoderNet load_decoder(const Run& r, bool required) {
  DecoderNet d = r.cfg.make_decoder();
  if (fs::exists(r.dir / kDecoder)) d.load(load_checkpoint(r.dir / kDecoder));
  else if (required) throw std::runtime_error("missing " + (r.dir / kDecoder).string() + "; run stage 2 first");
  return d;
}

void write_history(const fs::path& p, const training::TrainReport& rep) {
  std::ofstream os(p);
  os << "epoch,lr,validation\n";
  for (std::size_t e = 0; e < rep.epoch_lr.size(); ++e)
    os << e << ',' << format_double(rep.epoch_lr[e]) << ',' << format_double(rep.validation_history[e]) << '\n';
}

void write_pgm(const fs::path& p, const RealGrid& g, double lo, double hi) {
  std::ofstream os(p, std::ios::binary);
  os << "P5\n" << g.cols << ' ' << g.rows << "\n255\n";
  for (double v : g.data) {
    const double t = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    os.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0))));
  }
}

RealGrid normalized(const RealGrid& phi) {
  RealGrid g(phi.rows, phi.cols, Role::phase_normalized);
  for (std::size_t i = 0; i < g.size(); ++i) g.data[i] = phi.data[i] / (2.0 * std::numbers::pi);
  return g;
}

void append_metrics(std::ostream& os, const std::string& run_id, const std::string& split, const std::string& scope,
                    const training::Metrics& m) {
  os << run_id << ',' << split << ',' << scope << ',' << losses::format_metric(m.psnr) << ','
     << losses::format_metric(m.ssim) << '\n';
}

int cmd_synth(const std::string& spec_file, const std::string& out) {
  data::DatasetSpec spec;
  KeyValueFile kv = KeyValueFile::load(spec_file);
  spec.read(kv, "");
  if (const auto unknown = kv.unread_keys(); !unknown.empty())
    throw ConfigError("unknown dataset field '" + unknown.front() + "'");
  const fs::path dir = out.empty() ? run_root() / "dataset" : fs::path(out);
  data::write_dataset(dir, spec);
  std::cout << "wrote dataset to " << dir.string() << "\n";
  return 0;
}

int cmd_train(const std::string& config, const std::string& stage, std::string run_dir, const std::string& data_dir) {
  const RunConfig cfg = RunConfig::load(config);
  if (run_dir.empty()) run_dir = (run_root() / fs::path(config).stem()).string();
  fs::create_directories(run_dir);
  Run r{run_dir, cfg};
  RunLock lock(r.dir);
  cfg.to_kv().save(r.dir / kConfigEcho);
  const data::Dataset ds = load_data(cfg, data_dir);
  const auto det = cfg.detector_for_training();

  auto stage1 = [&] {
    auto model = cfg.make_optics();
    if (model.kind() == optics::OpticsKind::d2nn) {
      auto rep = training::algorithm_s1(model, ds, cfg.s1_phase_a, cfg.s1_joint_lr, cfg.seed);
      std::ofstream log(r.dir / "s1_log.csv");
      log << "layer,phase,trainable,loss\n";
      for (const auto& e : rep.log) {
        log << e.layer << ',' << e.phase << ',';
        for (std::size_t k = 0; k < e.trainable.size(); ++k) log << (k ? ";" : "") << e.trainable[k];
        log << ',' << format_double(e.loss) << '\n';
      }
      std::cout << "algorithm S1: loss after A(1) " << rep.loss_after_a1 << ", final " << rep.final_loss << "\n";
    } else {
      auto rep = training::stage1_optical(model, ds, cfg.stage1, cfg.seed);
      write_history(r.dir / "stage1_history.csv", rep);
      std::cout << "stage 1: loss " << rep.initial_loss << " -> " << rep.final_loss << "\n";
    }
    model.set_trainable(false);
    save_checkpoint(r.dir / kOptics, model.to_checkpoint());
  };
  auto stage2 = [&] {
    auto model = load_optics(r, true);
    model.set_trainable(false);
    DecoderNet dec = cfg.make_decoder();
    Discriminator disc = cfg.make_discriminator();
    losses::RandomFeatures feats(splitmix64(cfg.seed ^ 0xfea7u));
    training::Stage2Options opt{cfg.weights, &disc, cfg.perceptual_features ? &feats : nullptr};
    auto rep = training::stage2_decoder({&model, &dec, det}, ds, cfg.stage2, opt, cfg.seed);
    write_history(r.dir / "stage2_history.csv", rep);
    save_checkpoint(r.dir / kDecoder, dec.to_checkpoint());
    save_checkpoint(r.dir / kDiscriminator, disc.to_checkpoint());
    std::cout << "stage 2: best validation L1 " << rep.best_validation << "\n";
  };
  auto stage3 = [&] {
    auto model = load_optics(r, true);
    DecoderNet dec = load_decoder(r, true);
    auto rep = training::stage3_finetune({&model, &dec, det}, ds, cfg.stage3, cfg.seed);
    write_history(r.dir / "stage3_history.csv", rep.train);
    model.set_trainable(false);
    save_checkpoint(r.dir / kOptics, model.to_checkpoint());
    save_checkpoint(r.dir / kDecoder, dec.to_checkpoint());
    std::cout << "stage 3: validation SSIM " << rep.ssim_before << " -> " << rep.ssim_after << "\n";
  };

  if (stage == "1" || stage == "s1") {
    const bool d2nn = cfg.optics == "d2nn";
    if (stage == "1" && d2nn) throw std::invalid_argument("PhaseD2NN configs train with --stage s1");
    if (stage == "s1" && !d2nn) throw std::invalid_argument("--stage s1 needs optics.kind = d2nn");
    stage1();
  } else if (stage == "2") {
    stage2();
  } else if (stage == "3") {
    stage3();
  } else if (stage == "all") {
    stage1();
    stage2();
    stage3();
  } else {
    throw std::invalid_argument("unknown stage '" + stage + "' (expected 1, s1, 2, 3 or all)");
  }
  return 0;
}

int cmd_eval(const std::string& run_dir, const std::string& split, const std::string& data_dir) {
  Run r = open_run(run_dir);
  RunLock lock(r.dir);
  const data::Dataset ds = load_data(r.cfg, data_dir);
  auto model = load_optics(r, false);
  DecoderNet dec = load_decoder(r, false);
  const training::PipelineState st{&model, &dec, r.cfg.detector_for_training()};
  const std::vector<RealGrid>* patches = nullptr;
  if (split == "test") patches = &ds.test;
  else if (split == "train") patches = &ds.train;
  else if (split == "validation") patches = &ds.validation;
  else throw std::invalid_argument("unknown split '" + split + "'");

  std::ofstream os(r.dir / "metrics.csv");
  os << "run_id,split,scope,psnr,ssim\n";
  const std::string id = r.dir.filename().string();
  const auto patch = training::evaluate(st, *patches);
  append_metrics(os, id, split, "patch", patch);
  std::cout << "patch FoV: PSNR " << losses::format_metric(patch.psnr) << " SSIM " << patch.ssim << "\n";
  if (split == "test" && !ds.test_full.empty()) {
    const auto full = training::evaluate_full(st, ds.test_full, r.cfg.dataset.side);
    append_metrics(os, id, split, "full", full);
    std::cout << "full FoV: PSNR " << losses::format_metric(full.psnr) << " SSIM " << full.ssim << "\n";
  }
  return 0;
}

int cmd_gradcheck(const std::string& module) {
  bool ok = true;
  for (const auto& c : run_gradcheck_suite(module)) {
    const bool pass = c.report.passed();
    ok = ok && pass;
    std::printf("%-9s %-32s %s max rel error %.3e\n", c.module.c_str(), c.name.c_str(), pass ? "PASS" : "FAIL",
                c.report.max_rel_error());
  }
  return ok ? 0 : 1;
}

int cmd_baseline(const std::string& kind, const std::string& run_dir, const std::string& data_dir) {
  Run r = open_run(run_dir);
  RunLock lock(r.dir);
  const data::Dataset ds = load_data(r.cfg, data_dir);
  const std::string id = r.dir.filename().string();
  std::ofstream os(r.dir / ("baseline_" + kind + ".csv"));
  os << "run_id,split,scope,psnr,ssim\n";
  training::Metrics m;
  if (kind == "all-optical") {
    auto model = load_optics(r, true);
    m = training::all_optical_baseline(model, ds.test);
  } else if (kind == "bilinear") {
    auto model = load_optics(r, true);
    m = training::bilinear_baseline({&model, nullptr, r.cfg.detector_for_training()}, ds.test);
  } else if (kind == "phasesr") {
    DecoderNet dec = r.cfg.make_decoder();
    Discriminator disc = r.cfg.make_discriminator();
    training::Stage2Options opt{r.cfg.weights, &disc, nullptr};
    training::phasesr_baseline(dec, ds, r.cfg.phasesr, opt, r.cfg.seed);
    save_checkpoint(r.dir / "phasesr_decoder.optm", dec.to_checkpoint());
    training::PipelineState st{nullptr, &dec, r.cfg.detector_for_training()};
    m = training::evaluate(st, ds.test);
  } else {
    throw std::invalid_argument("unknown baseline kind '" + kind + "' (expected all-optical, phasesr or bilinear)");
  }
  append_metrics(os, id, "test", "patch", m);
  std::cout << kind << ": PSNR " << losses::format_metric(m.psnr) << " SSIM " << m.ssim << "\n";
  return 0;
}

int cmd_export(const std::string& run_dir, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols,
               std::size_t count, const std::string& data_dir) {
  Run r = open_run(run_dir);
  RunLock lock(r.dir);
  const data::Dataset ds = load_data(r.cfg, data_dir);
  auto model = load_optics(r, false);
  DecoderNet dec = load_decoder(r, false);
  const training::PipelineState st{&model, &dec, r.cfg.detector_for_training()};
  const bool full = !ds.test_full.empty();
  const auto& src = full ? ds.test_full : ds.test;
  std::vector<RealGrid> picked(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(std::min(count, src.size())));
  const auto recon = full ? training::reconstruct_full(st, picked, r.cfg.dataset.side) : training::reconstruct(st, picked);

  const fs::path out = r.dir / "export";
  fs::create_directories(out);
  std::ofstream prof(out / "profiles.csv");
  prof << "sample,line,index,position,truth,reconstruction\n";
  for (std::size_t i = 0; i < picked.size(); ++i) {
    const RealGrid truth = normalized(picked[i]);
    const auto s = losses::ssim(recon[i], truth, losses::SSIMParams::gaussian11());
    const std::string stem = "sample" + std::to_string(i);
    write_pgm(out / (stem + "_truth.pgm"), truth, 0.0, 1.0);
    write_pgm(out / (stem + "_recon.pgm"), recon[i], 0.0, 1.0);
    write_pgm(out / (stem + "_ssim.pgm"), s.map, 0.0, 1.0);
    save_grid(out / (stem + "_recon.bin"), recon[i]);
    for (std::size_t row : rows) {
      if (row >= truth.rows) throw std::out_of_range("profile row " + std::to_string(row) + " outside the image");
      for (std::size_t c = 0; c < truth.cols; ++c)
        prof << i << ",row," << row << ',' << c << ',' << format_double(truth.at(row, c)) << ','
             << format_double(recon[i].at(row, c)) << '\n';
    }
    for (std::size_t col : cols) {
      if (col >= truth.cols) throw std::out_of_range("profile column " + std::to_string(col) + " outside the image");
      for (std::size_t rr = 0; rr < truth.rows; ++rr)
        prof << i << ",col," << col << ',' << rr << ',' << format_double(truth.at(rr, col)) << ','
             << format_double(recon[i].at(rr, col)) << '\n';
    }
  }
  std::cout << "exported " << picked.size() << " samples to " << out.string() << "\n";
  return 0;
}

int cmd_ae(const std::string& out) {
  ae::StudyConfig sc;
  const auto rep = ae::run_ae_study(sc);
  std::ofstream os(out);
  rep.write_csv(os);
  rep.write_csv(std::cout);
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"cqpm: compressive phase imaging simulation and training"};
  app.require_subcommand(1);
  bool serial = false;
  app.add_flag("--serial", serial, "single-threaded reference kernels (bit-exact reruns)");

  std::string spec_file, out, config, stage, run_dir, data_dir, split = "test", module, kind;
  std::vector<std::size_t> rows, cols;
  std::size_t count = 2;

  auto* synth = app.add_subcommand("synth", "write a dataset directory");
  synth->add_option("--spec", spec_file, "dataset spec (key = value)")->required();
  synth->add_option("--out", out, "output directory (default $CQPM_RUN_ROOT/dataset)");

  auto* train = app.add_subcommand("train", "run a training stage into a run directory");
  train->add_option("--config", config, "run config (key = value)")->required();
  train->add_option("--stage", stage, "1 | s1 | 2 | 3 | all")->required();
  train->add_option("--run", run_dir, "run directory (default $CQPM_RUN_ROOT/<config stem>)");
  train->add_option("--data", data_dir, "dataset directory written by synth");

  auto* eval = app.add_subcommand("eval", "patch and full FoV PSNR/SSIM");
  eval->add_option("--run", run_dir, "run directory")->required();
  eval->add_option("--split", split, "test | validation | train");
  eval->add_option("--data", data_dir, "dataset directory written by synth");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient suites");
  grad->add_option("--module", module, "autodiff | optics | detector | losses | decoder | all")->required();

  auto* base = app.add_subcommand("baseline", "baseline evaluations");
  base->add_option("--kind", kind, "all-optical | phasesr | bilinear")->required();
  base->add_option("--run", run_dir, "run directory")->required();
  base->add_option("--data", data_dir, "dataset directory written by synth");

  auto* exp = app.add_subcommand("export", "images, SSIM maps and line profiles");
  exp->add_option("--run", run_dir, "run directory")->required();
  exp->add_option("--rows", rows, "row indices for line profiles")->delimiter(',');
  exp->add_option("--cols", cols, "column indices for line profiles")->delimiter(',');
  exp->add_option("--count", count, "number of test samples");
  exp->add_option("--data", data_dir, "dataset directory written by synth");

  auto* ael = app.add_subcommand("ae-study", "linear/nonlinear autoencoder comparison");
  ael->add_option("--out", out, "report CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  if (serial) {
    kernels::set_execution(kernels::Execution::serial);
    omp_set_num_threads(1);
  }
  try {
    if (*synth) return cmd_synth(spec_file, out);
    if (*train) return cmd_train(config, stage, run_dir, data_dir);
    if (*eval) return cmd_eval(run_dir, split, data_dir);
    if (*grad) return cmd_gradcheck(module);
    if (*base) return cmd_baseline(kind, run_dir, data_dir);
    if (*exp) return cmd_export(run_dir, rows, cols, count, data_dir);
    if (*ael) return cmd_ae(out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace cqpm::cli
