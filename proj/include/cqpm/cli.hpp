#pragma once

#include <filesystem>

namespace cqpm::cli {

// $CQPM_RUN_ROOT, or ./runs when unset.
std::filesystem::path run_root();

// Exclusive writer lock: creates <dir>/.lock or throws if it exists.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

int run(int argc, char** argv);

}  // namespace cqpm::cli
