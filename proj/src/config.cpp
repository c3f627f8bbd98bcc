#include "cqpm/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <type_traits>

namespace cqpm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

KeyValueFile KeyValueFile::parse(std::istream& is, const std::string& origin) {
  KeyValueFile kv;
  kv.origin_ = origin;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (kv.values_.count(key)) throw ConfigError(origin + ": duplicate key '" + key + "'");
    kv.values_[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  return parse(is, path.string());
}

void KeyValueFile::set(const std::string& key, double value) { values_[key] = format_double(value); }
void KeyValueFile::set(const std::string& key, std::uint64_t value) { values_[key] = std::to_string(value); }

void KeyValueFile::set(const std::string& key, const std::vector<std::size_t>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(values[i]);
  }
  values_[key] = s;
}

const std::string& KeyValueFile::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(origin_ + ": missing field '" + key + "'");
  read_.insert(key);
  return it->second;
}

std::string KeyValueFile::get_string(const std::string& key) const { return raw(key); }

double KeyValueFile::get_double(const std::string& key) const {
  const std::string& s = raw(key);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(origin_ + ": field '" + key + "' is not a number: '" + s + "'");
  return v;
}

std::uint64_t KeyValueFile::get_u64(const std::string& key) const {
  const std::string& s = raw(key);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(origin_ + ": field '" + key + "' is not a non-negative integer: '" + s + "'");
  return v;
}

bool KeyValueFile::get_bool(const std::string& key) const {
  const std::string& s = raw(key);
  if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "off" || s == "no") return false;
  throw ConfigError(origin_ + ": field '" + key + "' is not a boolean: '" + s + "'");
}

std::vector<std::size_t> KeyValueFile::get_list(const std::string& key) const {
  const std::string& s = raw(key);
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size())
      throw ConfigError(origin_ + ": field '" + key + "' has a non-integer entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

template <class T>
void KeyValueFile::read(const std::string& key, T& out) const {
  if (!has(key)) return;
  if constexpr (std::is_same_v<T, bool>) {
    out = get_bool(key);
  } else if constexpr (std::is_same_v<T, std::string>) {
    out = get_string(key);
  } else if constexpr (std::is_floating_point_v<T>) {
    out = get_double(key);
  } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
    out = get_list(key);
  } else {
    out = static_cast<T>(get_u64(key));
  }
}

template void KeyValueFile::read<bool>(const std::string&, bool&) const;
template void KeyValueFile::read<std::string>(const std::string&, std::string&) const;
template void KeyValueFile::read<double>(const std::string&, double&) const;
template void KeyValueFile::read<std::size_t>(const std::string&, std::size_t&) const;
template void KeyValueFile::read<std::vector<std::size_t>>(const std::string&, std::vector<std::size_t>&) const;

std::vector<std::string> KeyValueFile::unread_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!read_.count(k)) out.push_back(k);
  return out;
}

void KeyValueFile::write(std::ostream& os) const {
  for (const auto& [k, v] : values_) os << k << " = " << v << "\n";
}

void KeyValueFile::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  write(os);
}

}  // namespace cqpm
