#pragma once

// Experiment configuration: a JSON document (grammar in docs/config.md) with
// numbers given either as JSON numbers or as "p/q" strings.

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace hlab {

/// Every configuration problem; the runner maps it to exit status 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses text; syntax errors are reported as "<source>:<line>:<column>: <message>".
nlohmann::json parse_config_text(const std::string& text, const std::string& source = "config");
nlohmann::json load_config(const std::string& path);

/// "3", "2.5", "5/12", "-1/2" or a JSON number.
double parse_number(const nlohmann::json& v, const std::string& where);

/// Read-only view of one block with typed getters. Unknown keys are rejected by `allow`.
class ConfigBlock {
 public:
  ConfigBlock(const nlohmann::json* node, std::string path);

  bool has(const std::string& key) const;
  bool present() const { return node_ != nullptr; }
  const std::string& path() const { return path_; }

  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::vector<double> numbers(const std::string& key) const;  ///< scalar or array
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;
  long integer(const std::string& key, long fallback) const;
  std::uint64_t seed(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  ConfigBlock block(const std::string& key) const;
  const nlohmann::json& raw(const std::string& key) const;

  void allow(std::initializer_list<const char*> keys) const;

 private:
  const nlohmann::json* node_;
  std::string path_;
};

}  // namespace hlab
