#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace cqpm {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat `key = value` text format. `#` starts a comment; blank lines are
// ignored. Reads are tracked so unknown keys can be reported.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& is, const std::string& origin = "<stream>");
  static KeyValueFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set(const std::string& key, double value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, const std::vector<std::size_t>& values);

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::size_t> get_list(const std::string& key) const;

  template <class T>
  void read(const std::string& key, T& out) const;

  std::vector<std::string> unread_keys() const;
  const std::map<std::string, std::string>& entries() const { return values_; }

  void write(std::ostream& os) const;
  void save(const std::filesystem::path& path) const;

 private:
  const std::string& raw(const std::string& key) const;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> read_;
  std::string origin_;
};

// Writes doubles with round-trip precision.
std::string format_double(double v);

}  // namespace cqpm
