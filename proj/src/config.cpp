#include "harnack_lab/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace hlab {

namespace {

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

std::string child(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

}  // namespace

nlohmann::json parse_config_text(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // byte is one past the offending character
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string msg = e.what();
    const auto cut = msg.find(": ");
    if (cut != std::string::npos) msg = msg.substr(cut + 2);
    std::ostringstream out;
    out << source << ":" << line << ":" << col << ": " << msg;
    throw ConfigError(out.str());
  }
}

nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

double parse_number(const nlohmann::json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    const auto slash = s.find('/');
    double num = 0.0, den = 1.0;
    bool ok = slash == std::string::npos
                  ? parse_double(s, num)
                  : parse_double(std::string_view(s).substr(0, slash), num) &&
                        parse_double(std::string_view(s).substr(slash + 1), den);
    if (ok && den != 0.0) return num / den;
  }
  throw ConfigError(where + ": expected a number or \"p/q\", got " + v.dump());
}

ConfigBlock::ConfigBlock(const nlohmann::json* node, std::string path) : node_(node), path_(std::move(path)) {
  if (node_ && !node_->is_object()) throw ConfigError(path_ + ": expected an object");
}

bool ConfigBlock::has(const std::string& key) const { return node_ && node_->contains(key); }

const nlohmann::json& ConfigBlock::raw(const std::string& key) const {
  if (!has(key)) throw ConfigError(child(path_, key) + ": required field missing");
  return node_->at(key);
}

double ConfigBlock::number(const std::string& key) const { return parse_number(raw(key), child(path_, key)); }

double ConfigBlock::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::vector<double> ConfigBlock::numbers(const std::string& key) const {
  const auto& v = raw(key);
  std::vector<double> out;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(parse_number(v[i], child(path_, key) + "[" + std::to_string(i) + "]"));
    }
  } else {
    out.push_back(parse_number(v, child(path_, key)));
  }
  return out;
}

std::vector<double> ConfigBlock::numbers(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? numbers(key) : fallback;
}

long ConfigBlock::integer(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const double v = number(key);
  if (v != static_cast<double>(static_cast<long>(v))) throw ConfigError(child(path_, key) + ": expected an integer");
  return static_cast<long>(v);
}

std::uint64_t ConfigBlock::seed(const std::string& key) const {
  const auto& v = raw(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  throw ConfigError(child(path_, key) + ": expected a nonnegative integer seed");
}

std::string ConfigBlock::text(const std::string& key, const std::string& fallback) const {
  if (!has(key)) return fallback;
  const auto& v = node_->at(key);
  if (!v.is_string()) throw ConfigError(child(path_, key) + ": expected a string");
  return v.get<std::string>();
}

bool ConfigBlock::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto& v = node_->at(key);
  if (!v.is_boolean()) throw ConfigError(child(path_, key) + ": expected true or false");
  return v.get<bool>();
}

ConfigBlock ConfigBlock::block(const std::string& key) const {
  return ConfigBlock(has(key) ? &node_->at(key) : nullptr, child(path_, key));
}

void ConfigBlock::allow(std::initializer_list<const char*> keys) const {
  if (!node_) return;
  for (auto it = node_->begin(); it != node_->end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw ConfigError((path_.empty() ? std::string("config") : path_) + ": unknown field '" + it.key() + "'");
  }
}

}  // namespace hlab
