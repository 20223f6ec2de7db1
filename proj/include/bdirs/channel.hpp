#pragma once

// Deterministic synthesis of the THz line-of-sight channels: molecular
// absorption lookup, spreading + absorption path gain, uniform-linear-array
// responses, and the rank-one BS->IRS / IRS->user links built from them.

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bdirs/config.hpp"
#include "bdirs/types.hpp"

namespace bdirs {

struct AbsorptionTable {
  // (frequency Hz, absorption coefficient 1/m), frequencies strictly increasing
  std::vector<std::pair<double, double>> entries;

  void validate() const {
    if (entries.size() < 2) throw std::invalid_argument("absorption table needs at least 2 knots");
    for (size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].second < 0.0) throw std::invalid_argument("absorption coefficient must be >= 0");
      if (i > 0 && entries[i].first <= entries[i - 1].first)
        throw std::invalid_argument("absorption table frequencies must be strictly increasing");
    }
  }

  // Default table spanning 0.1-1.0 THz; override via a two-column file.
  static AbsorptionTable builtin() {
    AbsorptionTable t;
    t.entries = {{0.10e12, 0.005}, {0.30e12, 0.0116}, {0.55e12, 0.0535},
                 {0.85e12, 0.1}, {1.00e12, 0.2}};
    return t;
  }

  // Two columns (frequency_Hz, tau_per_m); '#' starts a comment.
  static AbsorptionTable from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("absorption table: cannot open '" + path + "'");
    AbsorptionTable t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      double f, tau;
      if (ls >> f >> tau) {
        t.entries.emplace_back(f, tau);
      } else {
        std::string rest;
        ls.clear();
        if (ls >> rest)
          throw std::invalid_argument("absorption table: malformed line " + std::to_string(lineno));
      }
    }
    t.validate();
    return t;
  }
};

// Piecewise-linear interpolation; no extrapolation outside the knot span.
inline double absorption_coefficient(const AbsorptionTable& table, double f_c) {
  const auto& e = table.entries;
  if (e.size() < 2) throw std::invalid_argument("absorption table needs at least 2 knots");
  if (f_c < e.front().first || f_c > e.back().first)
    throw std::out_of_range("absorption_coefficient: frequency outside table span");
  for (size_t i = 1; i < e.size(); ++i) {
    if (f_c <= e[i].first) {
      double w = (f_c - e[i - 1].first) / (e[i].first - e[i - 1].first);
      return e[i - 1].second + w * (e[i].second - e[i - 1].second);
    }
  }
  return e.back().second;
}

// q(f_c, d) = c / (4 pi f_c d) * exp(-tau d / 2)
inline double path_gain(double f_c, double d, double tau) {
  if (f_c <= 0.0 || d <= 0.0) throw std::domain_error("path_gain: f_c and d must be positive");
  if (tau < 0.0) throw std::domain_error("path_gain: tau must be >= 0");
  return kSpeedOfLight / (4.0 * M_PI * f_c * d) * std::exp(-0.5 * tau * d);
}

// ULA response, entry k = exp(j pi k theta); theta is the spatial frequency
// 2 d0 f_c sin(phi) / c chosen by the caller.
inline CVec array_response(double theta, int len) {
  if (len < 1) throw std::domain_error("array_response: element count must be >= 1");
  CVec a(len);
  for (int k = 0; k < len; ++k) {
    double ph = M_PI * k * theta;
    a(k) = Complex(std::cos(ph), std::sin(ph));
  }
  return a;
}

enum class Group { reflective, transmissive };

struct Geometry {
  double d1 = 0.0;                // BS -> IRS distance
  double phi_tx = 0.0;            // departure angle at the BS
  double phi_rx = 0.0;            // arrival angle at the IRS
  std::vector<double> d2;         // IRS -> user distances
  std::vector<double> phi;        // departure angles from the IRS, per user
  std::vector<Group> group;

  void validate() const {
    if (d1 <= 0.0) throw std::invalid_argument("geometry: d1 must be positive");
    if (d2.size() != phi.size() || d2.size() != group.size())
      throw std::invalid_argument("geometry: per-user fields must have equal length");
    const double half_pi = M_PI / 2 + 1e-12;
    if (std::abs(phi_tx) > half_pi || std::abs(phi_rx) > half_pi)
      throw std::invalid_argument("geometry: angles must lie in [-pi/2, pi/2]");
    for (size_t n = 0; n < d2.size(); ++n) {
      if (d2[n] <= 0.0) throw std::invalid_argument("geometry: d2 must be positive");
      if (std::abs(phi[n]) > half_pi)
        throw std::invalid_argument("geometry: angles must lie in [-pi/2, pi/2]");
    }
  }
};

struct ChannelSet {
  CMat G;              // K x M, rank one by construction
  std::vector<CVec> h; // length-K vector per user
};

// G = q(f_c, d1) a_rx(sin phi_rx) a_tx(sin phi_tx)^H, h_n = q(f_c, d2_n) a(sin phi_n).
// Antenna spacing is half a wavelength at f_c, so the spatial frequency is sin(phi).
inline ChannelSet synthesize_channels(const SystemConfig& cfg, const Geometry& geo,
                                      const AbsorptionTable& table) {
  geo.validate();
  if (static_cast<int>(geo.d2.size()) != cfg.n_users)
    throw std::invalid_argument("synthesize_channels: geometry has wrong user count");
  const int k = cfg.k_elements;
  const int m = cfg.m_antennas;
  const double tau = absorption_coefficient(table, cfg.f_c_hz);

  ChannelSet cs;
  const CVec a_rx = array_response(std::sin(geo.phi_rx), k);
  const CVec a_tx = array_response(std::sin(geo.phi_tx), m);
  cs.G = path_gain(cfg.f_c_hz, geo.d1, tau) * (a_rx * a_tx.adjoint());
  cs.h.reserve(cfg.n_users);
  for (int n = 0; n < cfg.n_users; ++n)
    cs.h.push_back(path_gain(cfg.f_c_hz, geo.d2[n], tau) * array_response(std::sin(geo.phi[n]), k));
  return cs;
}

}  // namespace bdirs
