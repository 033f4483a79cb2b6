#pragma once

// Flat key=value configuration files. Blank lines and '#' comments are
// ignored; unknown keys are rejected.

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gto/codec.hpp"

namespace gto {

using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline ConfigMap parse_config(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(Errc::config, "line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) fail(Errc::config, "line " + std::to_string(lineno) + ": empty key");
    out[key] = value;
  }
  return out;
}

inline ConfigMap read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end || v.empty()) fail(Errc::config, key + ": not a number: '" + v + "'");
  return out;
}

inline long parse_integer(const std::string& key, const std::string& v) {
  long out = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end || v.empty()) fail(Errc::config, key + ": not an integer: '" + v + "'");
  return out;
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) out.push_back(parse_double(key, detail::trim(item)));
  return out;
}

inline CodingMode parse_mode(const std::string& v) {
  if (v == "natural") return CodingMode::natural;
  if (v == "depth") return CodingMode::depth;
  fail(Errc::config, "mode must be 'natural' or 'depth', got '" + v + "'");
}

// Applies every key to `cfg`. Does not validate the result.
inline void apply_config(const ConfigMap& m, EncoderConfig& cfg) {
  for (const auto& [key, value] : m) {
    if (key == "q") cfg.q = parse_double(key, value);
    else if (key == "mode") cfg.mode = parse_mode(value);
    else if (key == "block_side") cfg.block_side = static_cast<int>(parse_integer(key, value));
    else if (key == "delta_set") cfg.delta_set = parse_double_list(key, value);
    else if (key == "m_tilde") cfg.m_tilde = static_cast<int>(parse_integer(key, value));
    else if (key == "gamma_scale") cfg.gamma_scale = parse_double(key, value);
    else if (key == "t_low") cfg.thresholds.low = parse_double(key, value);
    else if (key == "t_high") cfg.thresholds.high = parse_double(key, value);
    else if (key == "alpha") cfg.alpha = parse_double(key, value);
    else if (key == "beta") cfg.beta = parse_double(key, value);
    else if (key == "max_iter") cfg.max_iter = static_cast<int>(parse_integer(key, value));
    else if (key == "tol") cfg.tol = parse_double(key, value);
    else if (key == "threads") {
      const long t = parse_integer(key, value);
      if (t < 0) fail(Errc::config, "threads must be >= 0");
      cfg.threads = static_cast<unsigned>(t);
    } else fail(Errc::config, "unknown key '" + key + "'");
  }
}

}  // namespace gto
