#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cqpm/cli.hpp"

namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "cqpm");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cqpm::cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& body) {
  fs::create_directories(cqpm::cli::run_root());
  const fs::path p = cqpm::cli::run_root() / (name + ".txt");
  std::ofstream(p) << body;
  return p;
}

const char* kTiny =
    "seed = 4\n"
    "dataset.side = 16\ndataset.train_count = 40\ndataset.test_count = 4\n"
    "dataset.full_fov_count = 1\ndataset.full_side = 40\n"
    "optics.lff_radius = 8\n"
    "decoder.width = 4\n"
    "stage1.epochs = 2\nstage2.epochs = 1\nstage3.epochs = 1\nphasesr.epochs = 1\n"
    "s1.epochs = 1\n";

}  // namespace

TEST_CASE("run root comes from the environment") {
  CHECK(cqpm::cli::run_root().string().find("cli_runs") != std::string::npos);
}

TEST_CASE("eval on untrained models writes finite metrics") {
  const fs::path dir = cqpm::cli::run_root() / "untrained";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "config.txt") << kTiny;
  CHECK(run({"eval", "--run", dir.string(), "--split", "test"}) == 0);
  const std::string csv = slurp(dir / "metrics.csv");
  CHECK(csv.find("run_id,split,scope,psnr,ssim") == 0);
  CHECK(csv.find("untrained,test,patch,") != std::string::npos);
  CHECK(csv.find("untrained,test,full,") != std::string::npos);
  CHECK(csv.find("nan") == std::string::npos);
}

TEST_CASE("train stages, baselines and export") {
  const fs::path cfg = write_config("tiny", kTiny);
  fs::remove_all(cqpm::cli::run_root() / "tiny");
  CHECK(run({"--serial", "train", "--config", cfg.string(), "--stage", "1"}) == 0);
  const fs::path dir = cqpm::cli::run_root() / "tiny";
  CHECK(fs::exists(dir / "optics.optm"));
  CHECK(fs::exists(dir / "config.txt"));
  CHECK_FALSE(fs::exists(dir / ".lock"));
  CHECK(run({"train", "--config", cfg.string(), "--stage", "2"}) == 0);
  CHECK(run({"train", "--config", cfg.string(), "--stage", "3"}) == 0);
  CHECK(fs::exists(dir / "decoder.optm"));
  CHECK(run({"baseline", "--kind", "all-optical", "--run", dir.string()}) == 0);
  CHECK(slurp(dir / "baseline_all-optical.csv").find("tiny,test,patch,") != std::string::npos);
  CHECK(run({"baseline", "--kind", "phasesr", "--run", dir.string()}) == 0);
  CHECK(run({"baseline", "--kind", "bilinear", "--run", dir.string()}) == 0);
  CHECK(run({"export", "--run", dir.string(), "--rows", "3,7", "--cols", "5", "--count", "1"}) == 0);
  CHECK(fs::exists(dir / "export" / "sample0_ssim.pgm"));
  const std::string prof = slurp(dir / "export" / "profiles.csv");
  CHECK(prof.find("0,row,7,") != std::string::npos);
  CHECK(prof.find("0,col,5,") != std::string::npos);
}

TEST_CASE("stage routing for diffractive configs") {
  const fs::path cfg = write_config("tiny_d2nn", std::string(kTiny) + "optics.kind = d2nn\noptics.d2nn_layers = 2\n");
  CHECK(run({"train", "--config", cfg.string(), "--stage", "1"}) != 0);
  CHECK(run({"train", "--config", cfg.string(), "--stage", "s1"}) == 0);
  const std::string log = slurp(cqpm::cli::run_root() / "tiny_d2nn" / "s1_log.csv");
  CHECK(log.find("1,A,d2nn.phase1;d2nn.power1") != std::string::npos);
  CHECK(log.find("2,B,d2nn.phase1;d2nn.phase2;d2nn.power2") != std::string::npos);
}

TEST_CASE("gradcheck subcommand") {
  CHECK(run({"gradcheck", "--module", "losses"}) == 0);
  CHECK(run({"gradcheck", "--module", "nonsense"}) != 0);
}

TEST_CASE("errors give nonzero exit codes") {
  CHECK(run({}) != 0);
  CHECK(run({"frobnicate"}) != 0);
  CHECK(run({"eval", "--run", "/nonexistent/run/dir"}) != 0);
  CHECK(run({"eval", "--bogus-flag"}) != 0);
  const fs::path bad = write_config("bad", "seed = 1\nstage2.lr = fast\n");
  CHECK(run({"train", "--config", bad.string(), "--stage", "1"}) != 0);
  const fs::path unknown = write_config("unknown", "seed = 1\nstage2.speed = 3\n");
  CHECK(run({"train", "--config", unknown.string(), "--stage", "1"}) != 0);
  CHECK(run({"train", "--config", write_config("fresh", kTiny).string(), "--stage", "2"}) != 0);
}

TEST_CASE("a held lock blocks a second writer") {
  const fs::path dir = cqpm::cli::run_root() / "locked";
  fs::create_directories(dir);
  std::ofstream(dir / "config.txt") << kTiny;
  {
    cqpm::cli::RunLock lock(dir);
    CHECK_THROWS(cqpm::cli::RunLock(dir));
    CHECK(run({"eval", "--run", dir.string()}) != 0);
  }
  CHECK(run({"eval", "--run", dir.string()}) == 0);
}

TEST_CASE("synth writes a dataset directory") {
  const fs::path spec = write_config("spec", "kind = synthetic-digits\nside = 16\ntrain_count = 10\ntest_count = 2\nfull_fov_count = 1\nfull_side = 32\n");
  const fs::path out = cqpm::cli::run_root() / "ds";
  fs::remove_all(out);
  CHECK(run({"synth", "--spec", spec.string(), "--out", out.string()}) == 0);
  CHECK(fs::exists(out / "manifest.txt"));
  CHECK(fs::exists(out / "train" / "000009.bin"));
}
