#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "coagdiff/simulator.hpp"

namespace coagdiff {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat sectioned key-value configuration. Keys are addressed as
/// "section.key"; later assignments (overrides) replace earlier ones.
class Config {
 public:
  Config() = default;

  static Config parse(std::istream& in, const std::string& source = "<input>");
  static Config load(const std::filesystem::path& path);

  bool empty() const { return entries_.empty(); }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  void set(const std::string& key, const std::string& value);
  /// Applies entries of `other` on top of this one.
  void merge(const Config& other);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::size_t> get_size_list(const std::string& key,
                                         const std::vector<std::size_t>& fallback) const;
  std::optional<std::string> raw(const std::string& key) const;

  /// Throws ConfigError naming every key that no getter has read.
  void require_all_used() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  std::map<std::string, std::string> entries_;
  std::string source_ = "<defaults>";
  mutable std::set<std::string> used_;
};

/// Reads [kernel] [diffusion] [grid] [time] [initial] [reaction] [output]
/// [diagnostics] into a simulator configuration.
SimConfig sim_config_from(const Config& cfg);

/// Parses "--section.key value" / "--section.key=value" pairs.
Config overrides_from_args(const std::vector<std::string>& args);

}  // namespace coagdiff
