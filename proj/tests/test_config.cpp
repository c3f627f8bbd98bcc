#include <doctest.h>

#include <sstream>

#include "cqpm/config.hpp"
#include "cqpm/training.hpp"

using namespace cqpm;

TEST_CASE("key = value parsing") {
  std::istringstream is("# comment\n a = 1 \n\nb=hello world # trailing\nlist = 1, 2,3\nflag = true\n");
  const auto kv = KeyValueFile::parse(is);
  CHECK(kv.get_u64("a") == 1);
  CHECK(kv.get_string("b") == "hello world");
  CHECK(kv.get_list("list") == std::vector<std::size_t>{1, 2, 3});
  CHECK(kv.get_bool("flag"));
}

TEST_CASE("config errors name the field") {
  std::istringstream dup("a = 1\na = 2\n");
  CHECK_THROWS_AS(KeyValueFile::parse(dup), ConfigError);
  std::istringstream noeq("just words\n");
  CHECK_THROWS_AS(KeyValueFile::parse(noeq), ConfigError);
  std::istringstream ok("a = x\n");
  const auto kv = KeyValueFile::parse(ok);
  try {
    kv.get_string("missing_key");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("missing_key") != std::string::npos);
  }
  CHECK_THROWS_AS(kv.get_double("a"), ConfigError);
}

TEST_CASE("doubles round trip exactly") {
  for (double v : {0.1, 1.0 / 3.0, 5e-6, 632.8e-9, 1e300}) {
    KeyValueFile kv;
    kv.set("v", v);
    std::stringstream ss;
    kv.write(ss);
    CHECK(KeyValueFile::parse(ss).get_double("v") == v);
  }
}

TEST_CASE("run config echo reproduces the config") {
  auto c = training::RunConfig::desk();
  c.seed = 77;
  c.stage2.milestones = {3, 9};
  c.detector.noise_enabled = true;
  c.dataset.kind = data::DatasetKind::synthetic_digits;
  std::stringstream ss;
  c.to_kv().write(ss);
  const auto back = training::RunConfig::from_kv(KeyValueFile::parse(ss));
  std::stringstream again;
  back.to_kv().write(again);
  CHECK(again.str() == ss.str());
  CHECK(back.seed == 77);
  CHECK(back.stage2.milestones == std::vector<std::size_t>{3, 9});
}

TEST_CASE("profiles") {
  const auto full = training::RunConfig::full();
  CHECK(full.stage1.epochs == 1500);
  CHECK(full.stage1.lr == 0.1);
  CHECK(full.stage1.milestones == std::vector<std::size_t>{50, 400, 650, 1000, 1400});
  CHECK(full.s1_phase_a.lr == 0.001);
  CHECK(full.s1_joint_lr == 5e-5);
  CHECK(full.stage3.lr == 5e-6);
  CHECK(full.stage3.epochs == 24000);
  CHECK(full.stage1.batch_size == 32);
  CHECK(full.lff_radius == 128);
  const auto desk = training::RunConfig::desk();
  CHECK(desk.stage1.epochs == 150);
  CHECK(desk.dataset.side == 32);
  CHECK(desk.detector.compression == 16);
  std::istringstream d2("profile = full\noptics.kind = d2nn\n");
  CHECK(training::RunConfig::from_kv(KeyValueFile::parse(d2)).stage3.epochs == 3000);
}

TEST_CASE("unknown and malformed run config fields are rejected") {
  std::istringstream unknown("seed = 1\nstage9.epochs = 3\n");
  CHECK_THROWS_WITH_AS(training::RunConfig::from_kv(KeyValueFile::parse(unknown)),
                       doctest::Contains("stage9.epochs"), ConfigError);
  std::istringstream bad("detector.compression = 8\n");
  CHECK_THROWS(training::RunConfig::from_kv(KeyValueFile::parse(bad)));
  std::istringstream prof("profile = laptop\n");
  CHECK_THROWS_AS(training::RunConfig::from_kv(KeyValueFile::parse(prof)), ConfigError);
}
