#pragma once

// Scenario configuration. Files are flat "key = value" text, '#' starts a
// comment. dBm quantities are converted to watts once here; everything
// downstream works in SI units.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace bdirs {

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

struct SystemConfig {
  // counts
  int n_users = 4;
  int n_reflective = 2;   // users [0, n_reflective) reflect, the rest transmit
  int m_antennas = 49;
  int m_rf = 4;
  int k_elements = 25;

  // physics
  double f_c_hz = 0.1e12;
  double bandwidth_hz = 1e6;
  double n0_dbm_hz = -174.0;
  double p_max_dbm = 20.0;

  // geometry sampling ranges
  double d1_m = 30.0;
  double d2_min_m = 5.0;
  double d2_max_m = 20.0;

  // solver knobs
  double eps_outer = 1e-4;
  int max_outer = 100;
  int analog_max_sweeps = 6;
  int theta_max_iters = 80;       // manifold steps per outer iteration
  uint64_t seed = 1;

  // empty -> built-in absorption table
  std::string absorption_table;

  int n_transmissive() const { return n_users - n_reflective; }
  double p_max_w() const { return dbm_to_watt(p_max_dbm); }
  double sigma2_w() const { return dbm_to_watt(n0_dbm_hz) * bandwidth_hz; }

  void validate() const {
    if (n_users < 1) throw std::invalid_argument("config: N must be >= 1");
    if (n_reflective < 0 || n_reflective > n_users)
      throw std::invalid_argument("config: N_r must lie in [0, N]");
    if (n_users > m_rf)
      throw std::invalid_argument("config: N exceeds the number of RF chains M_RF");
    if (m_rf > m_antennas) throw std::invalid_argument("config: M_RF must not exceed M");
    if (k_elements < 1) throw std::invalid_argument("config: K must be >= 1");
    if (f_c_hz <= 0 || bandwidth_hz <= 0) throw std::invalid_argument("config: f_c and B must be positive");
    if (d1_m <= 0 || d2_min_m <= 0 || d2_max_m < d2_min_m)
      throw std::invalid_argument("config: invalid geometry ranges");
    if (eps_outer <= 0) throw std::invalid_argument("config: eps_outer must be positive");
    if (max_outer < 1 || analog_max_sweeps < 1 || theta_max_iters < 1)
      throw std::invalid_argument("config: iteration caps must be >= 1");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::map<std::string, std::string> parse_kv(std::istream& in, const std::string& what) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(what + ": line " + std::to_string(lineno) + " is not 'key = value'");
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

inline double to_double(const std::string& key, const std::string& v) {
  size_t pos = 0;
  double x = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
  return x;
}

inline int to_int(const std::string& key, const std::string& v) {
  double x = to_double(key, v);
  if (x != std::floor(x)) throw std::invalid_argument("config: " + key + " must be an integer");
  return static_cast<int>(x);
}

}  // namespace detail

inline SystemConfig parse_config(std::istream& in) {
  auto kv = detail::parse_kv(in, "config");
  SystemConfig c;
  for (const auto& [key, val] : kv) {
    if (key == "N") c.n_users = detail::to_int(key, val);
    else if (key == "N_r") c.n_reflective = detail::to_int(key, val);
    else if (key == "M") c.m_antennas = detail::to_int(key, val);
    else if (key == "M_RF") c.m_rf = detail::to_int(key, val);
    else if (key == "K") c.k_elements = detail::to_int(key, val);
    else if (key == "f_c") c.f_c_hz = detail::to_double(key, val);
    else if (key == "B") c.bandwidth_hz = detail::to_double(key, val);
    else if (key == "N0_dbm_hz") c.n0_dbm_hz = detail::to_double(key, val);
    else if (key == "P_max_dbm") c.p_max_dbm = detail::to_double(key, val);
    else if (key == "d1") c.d1_m = detail::to_double(key, val);
    else if (key == "d2_min") c.d2_min_m = detail::to_double(key, val);
    else if (key == "d2_max") c.d2_max_m = detail::to_double(key, val);
    else if (key == "eps_outer") c.eps_outer = detail::to_double(key, val);
    else if (key == "max_outer") c.max_outer = detail::to_int(key, val);
    else if (key == "analog_max_sweeps") c.analog_max_sweeps = detail::to_int(key, val);
    else if (key == "theta_max_iters") c.theta_max_iters = detail::to_int(key, val);
    else if (key == "seed") c.seed = static_cast<uint64_t>(detail::to_double(key, val));
    else if (key == "absorption_table") c.absorption_table = val;
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

inline SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  return parse_config(in);
}

}  // namespace bdirs
