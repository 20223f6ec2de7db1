#pragma once

// Time- and frequency-divided reference schemes. Each runs one single-mode
// solve per user group (the scattering matrix degenerates to a K x K unitary
// block) and combines the group rates with equal resource shares.
//
// TDMA serves the groups in alternating slots: full power and bandwidth per
// slot, so each slot sees the full surface aperture.
// FDMA serves both groups at once in half bandwidths. The surface is a
// single frequency-flat device shared by both bands, modeled as a static
// equal power splitter: each band sees its unitary block scaled by 1/sqrt(2)
// (together they satisfy the hybrid-mode energy constraint). Per band the
// power budget is P_max/2 and the noise is N0 * B/2.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdirs/solver.hpp"

namespace bdirs {

enum class Scheme { hybrid, tdma, fdma };

inline std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::hybrid: return "hybrid";
    case Scheme::tdma: return "tdma";
    case Scheme::fdma: return "fdma";
  }
  throw std::invalid_argument("unknown scheme");
}

inline Scheme scheme_from_name(const std::string& name) {
  if (name == "hybrid") return Scheme::hybrid;
  if (name == "tdma") return Scheme::tdma;
  if (name == "fdma") return Scheme::fdma;
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

struct BaselineResult {
  Scheme scheme = Scheme::hybrid;
  double effective_rate = 0.0;              // bits/s/Hz over the full band
  std::vector<double> group_rates;          // raw per-solve rates
  std::vector<double> weights;              // resource share per entry, sums to 1
  std::vector<Solution> solves;
};

namespace detail {

inline std::vector<int> group_members(const std::vector<Group>& groups, Group which) {
  std::vector<int> idx;
  for (size_t n = 0; n < groups.size(); ++n)
    if (groups[n] == which) idx.push_back(static_cast<int>(n));
  return idx;
}

// Single-group, single-mode solve with an optional amplitude scale on the
// user channels (the FDMA surface split) and overridden power/noise.
inline Solution solve_single_mode(const ChannelSet& channels, const std::vector<int>& members,
                                  const SystemConfig& cfg, const SolveOptions& opts,
                                  double h_scale, double p_max, double sigma2, uint64_t seed) {
  SolveProblem prob;
  prob.g = channels.G;
  prob.theta_rows = cfg.k_elements;
  prob.h_lifted.reserve(members.size());
  for (int n : members) prob.h_lifted.push_back(h_scale * channels.h[n]);
  prob.noise.sigma2 = sigma2;
  prob.p_max = p_max;
  prob.m_rf = cfg.m_rf;
  SolveOptions o = opts;
  o.seed = seed;
  return solve_problem(prob, o);
}

}  // namespace detail

// Half/half slot split, full P_max and full bandwidth inside each slot.
inline BaselineResult tdma_rate(const ChannelSet& channels, const std::vector<Group>& groups,
                                const SystemConfig& cfg, const SolveOptions& opts) {
  cfg.validate();
  BaselineResult out;
  out.scheme = Scheme::tdma;
  const double sigma2 = cfg.sigma2_w();
  int slot = 0;
  for (Group g : {Group::reflective, Group::transmissive}) {
    const auto members = detail::group_members(groups, g);
    if (members.empty()) { ++slot; continue; }
    Solution s = detail::solve_single_mode(channels, members, cfg, opts, 1.0, cfg.p_max_w(),
                                           sigma2, substream(opts.seed, 0x7D00 + slot));
    out.group_rates.push_back(s.sum_rate);
    out.weights.push_back(0.5);
    out.effective_rate += 0.5 * s.sum_rate;
    out.solves.push_back(std::move(s));
    ++slot;
  }
  return out;
}

// Half/half bandwidth split: per band P_max/2 and sigma^2 = N0 B / 2. With
// both groups active each band's surface block carries half the incident
// energy (amplitude 1/sqrt(2)); a lone group keeps the full surface.
inline BaselineResult fdma_rate(const ChannelSet& channels, const std::vector<Group>& groups,
                                const SystemConfig& cfg, const SolveOptions& opts) {
  cfg.validate();
  BaselineResult out;
  out.scheme = Scheme::fdma;
  const double sigma2_half = 0.5 * cfg.sigma2_w();
  const double p_half = 0.5 * cfg.p_max_w();
  const bool both_active = !detail::group_members(groups, Group::reflective).empty() &&
                           !detail::group_members(groups, Group::transmissive).empty();
  const double h_scale = both_active ? 1.0 / std::sqrt(2.0) : 1.0;
  int band = 0;
  for (Group g : {Group::reflective, Group::transmissive}) {
    const auto members = detail::group_members(groups, g);
    if (members.empty()) { ++band; continue; }
    Solution s = detail::solve_single_mode(channels, members, cfg, opts, h_scale, p_half,
                                           sigma2_half, substream(opts.seed, 0xFD00 + band));
    out.group_rates.push_back(s.sum_rate);
    out.weights.push_back(0.5);
    out.effective_rate += 0.5 * s.sum_rate;
    out.solves.push_back(std::move(s));
    ++band;
  }
  return out;
}

// Hybrid mode wrapped in the same result shape for scheme sweeps.
inline BaselineResult hybrid_rate(const ChannelSet& channels, const std::vector<Group>& groups,
                                  const SystemConfig& cfg, const SolveOptions& opts) {
  BaselineResult out;
  out.scheme = Scheme::hybrid;
  Solution s = bcd_solve(channels, groups, cfg, opts);
  out.effective_rate = s.sum_rate;
  out.group_rates.push_back(s.sum_rate);
  out.weights.push_back(1.0);
  out.solves.push_back(std::move(s));
  return out;
}

inline BaselineResult run_scheme(Scheme scheme, const ChannelSet& channels,
                                 const std::vector<Group>& groups, const SystemConfig& cfg,
                                 const SolveOptions& opts) {
  switch (scheme) {
    case Scheme::hybrid: return hybrid_rate(channels, groups, cfg, opts);
    case Scheme::tdma: return tdma_rate(channels, groups, cfg, opts);
    case Scheme::fdma: return fdma_rate(channels, groups, cfg, opts);
  }
  throw std::invalid_argument("unknown scheme");
}

}  // namespace bdirs
