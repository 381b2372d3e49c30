#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "qrepeater/chain_sim.hpp"
#include "qrepeater/params.hpp"

namespace qrepeater::cli {

// Everything the command-line tool can be told, from defaults, a
// configuration file and command-line overrides, in that order.
struct Settings {
  RepeaterParams params;
  bool include_source_prep = false;
  std::uint64_t trials = 10000;
  std::uint64_t seed = 1;
  sim::RestartPolicy policy = sim::RestartPolicy::full_restart;
  int max_links = 16;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t idx = 0;
    const double x = std::stod(v, &idx);
    if (idx != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("value for " + key + " is not a number: '" + v + "'");
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    size_t idx = 0;
    const long long x = std::stoll(v, &idx);
    if (idx != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("value for " + key + " is not an integer: '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("value for " + key + " must be true/false/1/0, got '" + v + "'");
}

}  // namespace detail

inline sim::RestartPolicy parse_restart_policy(const std::string& raw) {
  std::string v = raw;
  for (char& ch : v)
    if (ch == '-') ch = '_';
  if (v == "full_restart") return sim::RestartPolicy::full_restart;
  if (v == "paper_factor") return sim::RestartPolicy::paper_factor;
  throw std::invalid_argument("restart_policy must be full-restart or paper-factor, got '" +
                              raw + "'");
}

// Applies one key = value assignment; shared between the configuration file
// parser and any other override source so the key vocabulary stays single.
inline void apply_setting(Settings& s, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_int;
  if (key == "alpha2") {
    s.params.alpha2 = parse_double(key, value);
  } else if (key == "eta_m") {
    s.params.eta_m = parse_double(key, value);
  } else if (key == "eta_d") {
    s.params.eta_d = parse_double(key, value);
  } else if (key == "p") {
    s.params.p = parse_double(key, value);
  } else if (key == "r_hz") {
    s.params.r_hz = parse_double(key, value);
  } else if (key == "L_km") {
    s.params.L_km = parse_double(key, value);
  } else if (key == "n") {
    const long long n = parse_int(key, value);
    if (n < 0 || n > 30) throw std::invalid_argument("n must lie in [0, 30]");
    s.params.n = static_cast<int>(n);
  } else if (key == "L_att_km") {
    s.params.L_att_km = parse_double(key, value);
  } else if (key == "c_fiber_mps") {
    s.params.c_fiber_mps = parse_double(key, value);
  } else if (key == "include_source_prep") {
    s.include_source_prep = parse_bool(key, value);
  } else if (key == "trials") {
    const long long t = parse_int(key, value);
    if (t < 1) throw std::invalid_argument("trials must be positive");
    s.trials = static_cast<std::uint64_t>(t);
  } else if (key == "seed") {
    const long long v64 = parse_int(key, value);
    if (v64 < 0) throw std::invalid_argument("seed must be non-negative");
    s.seed = static_cast<std::uint64_t>(v64);
  } else if (key == "restart_policy") {
    s.policy = parse_restart_policy(value);
  } else if (key == "max_links") {
    const long long m = parse_int(key, value);
    if (m < 1 || m > (1LL << 30)) throw std::invalid_argument("max_links must lie in [1, 2^30]");
    s.max_links = static_cast<int>(m);
  } else {
    throw std::invalid_argument("unknown configuration key: " + key);
  }
}

// Flat key = value file; blank lines and everything after '#' are ignored.
inline void load_config_file(Settings& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open configuration file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = detail::trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected key = value");
    try {
      apply_setting(s, key, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace qrepeater::cli
