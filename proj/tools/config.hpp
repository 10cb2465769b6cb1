#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <toml.hpp>

#include "jarz/error.hpp"

// TOML run configuration with `key=value` overrides. Keys are dotted paths
// ("kernel.h"); every lookup error names its key.
namespace jarz::cli {

struct ConfigError : InvalidArgument {
  using InvalidArgument::InvalidArgument;
};

class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);
  static Config from_string(std::string_view text, std::string_view source = "config");

  // "a.b=value". The value is read as a TOML value; anything that does not
  // parse as one is taken as a bare string.
  void apply_override(std::string_view assignment);

  // Throws ConfigError naming the first key outside `allowed`.
  void check_keys(const std::set<std::string>& allowed) const;
  std::vector<std::string> keys() const;

  bool has(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const;
  double require_double(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;
  std::uint64_t require_uint(std::string_view key) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::string get_string(std::string_view key, std::string_view fallback) const;
  std::string require_string(std::string_view key) const;
  std::vector<double> require_doubles(std::string_view key) const;
  std::vector<std::string> get_strings(std::string_view key,
                                       std::vector<std::string> fallback) const;
  // True when the key holds an array (as opposed to a string keyword).
  bool is_array(std::string_view key) const;

 private:
  const toml::node* find(std::string_view key) const;
  const toml::node& require(std::string_view key) const;

  toml::table root_;
};

}  // namespace jarz::cli
