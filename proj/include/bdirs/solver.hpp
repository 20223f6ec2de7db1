#pragma once

// Outer block-coordinate ascent tying the pieces together:
//   analog phases -> digital precoder -> scattering matrix -> auxiliaries.
// Every block either maximizes the surrogate F exactly or is guarded by an
// accept-if-not-worse test, so the recorded F sequence is non-decreasing.
//
// The landscape is multimodal: which user ends up carrying the traffic is
// decided early and a bad draw locks in a poor basin. bcd_solve therefore
// runs a deterministic restart set (one per candidate lead user, warm-started
// from that user's single-user solution, plus one proportional start) and
// returns the best trajectory.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bdirs/beamforming.hpp"
#include "bdirs/channel.hpp"
#include "bdirs/config.hpp"
#include "bdirs/fp_core.hpp"
#include "bdirs/manifold.hpp"
#include "bdirs/rng.hpp"
#include "bdirs/types.hpp"

namespace bdirs {

struct SolveOptions {
  double eps_outer = 1e-4;   // |F_i - F_{i+1}| threshold, sum-rate units
  int max_outer = 100;
  int analog_max_sweeps = 6;
  int theta_max_iters = 80;  // manifold steps per outer iteration
  int theta_max_halvings = 30;
  double theta_grad_tol_per_element = 1e-6;  // ||J||^2 tolerance = this * K
  uint64_t seed = 1;
  bool leader_restarts = true;
  int warmup_outer = 12;     // single-user warmup iterations per restart
  double warmup_eps = 1e-3;

  static SolveOptions from_config(const SystemConfig& cfg) {
    SolveOptions o;
    o.eps_outer = cfg.eps_outer;
    o.max_outer = cfg.max_outer;
    o.analog_max_sweeps = cfg.analog_max_sweeps;
    o.theta_max_iters = cfg.theta_max_iters;
    o.seed = cfg.seed;
    return o;
  }
};

struct OuterRecord {
  double surrogate = 0.0;   // F after the auxiliary update (== sum rate there)
  double sum_rate = 0.0;
  double power = 0.0;
  double c1_residual = 0.0;
  int analog_sweeps = 0;
  int theta_iterations = 0;
  double wall_ms = 0.0;
};

struct SolveTrace {
  std::vector<OuterRecord> outer;

  std::vector<double> surrogate_values() const {
    std::vector<double> v;
    v.reserve(outer.size());
    for (const auto& r : outer) v.push_back(r.surrogate);
    return v;
  }

  // largest drop of F between consecutive outer iterations (>= 0 means monotone)
  double worst_decrease() const {
    double worst = 0.0;
    for (size_t i = 1; i < outer.size(); ++i)
      worst = std::min(worst, outer[i].surrogate - outer[i - 1].surrogate);
    return -worst;
  }
};

struct Solution {
  HybridPrecoder precoder;
  ScatteringMatrix theta;
  AuxState aux;
  double sum_rate = 0.0;
  bool converged = false;
  SolveTrace trace;
};

namespace detail {

// One BCD instance: either the hybrid problem (theta_rows = 2K) or a
// single-mode sub-problem (theta_rows = K) as used by the baselines.
struct SolveProblem {
  CMat g;                      // K x M
  std::vector<CVec> h_lifted;  // per user, length theta_rows
  NoiseModel noise;
  double p_max = 0.0;
  int m_rf = 0;
  int theta_rows = 0;
};

inline EffectiveChannels effective_from_lifted(const SolveProblem& p, const CMat& theta) {
  EffectiveChannels hbar;
  hbar.hbar.reserve(p.h_lifted.size());
  for (const auto& h : p.h_lifted) hbar.hbar.push_back(effective_channel(h, theta, p.g));
  return hbar;
}

inline CMat random_phase_matrix(int rows, int cols, uint64_t seed) {
  SplitMix64 gen(seed);
  CMat a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const double ph = gen.uniform(0.0, 2.0 * M_PI);
      a(i, j) = Complex(std::cos(ph), std::sin(ph));
    }
  return a;
}

// Achievable-SINR upper bound per user: ||h|| sigma_max(G) sqrt(P) through a
// norm-preserving scattering matrix. Used only to shape initial power splits.
inline RVec sinr_upper_bounds(const SolveProblem& p) {
  Eigen::SelfAdjointEigenSolver<CMat> eig(p.g * p.g.adjoint());
  const double smax = std::sqrt(std::max(eig.eigenvalues().maxCoeff(), 0.0));
  RVec b(static_cast<int>(p.h_lifted.size()));
  for (size_t n = 0; n < p.h_lifted.size(); ++n) {
    const double amp = p.h_lifted[n].norm() * smax;
    b(static_cast<int>(n)) = amp * amp * p.p_max / p.noise.sigma2;
  }
  return b;
}

// Matched-filter digital start: column n follows V_RF^H hbar_n with power
// share weights(n) of p_max.
inline CMat matched_digital_init(const SolveProblem& p, const CMat& v_rf,
                                 const EffectiveChannels& hbar, const RVec& weights) {
  const int n_users = static_cast<int>(p.h_lifted.size());
  CMat v_bb = CMat::Zero(p.m_rf, n_users);
  const CMat metric = v_rf.adjoint() * v_rf;
  for (int n = 0; n < n_users; ++n) {
    const CVec r = v_rf.adjoint() * hbar.hbar[n];
    const double nr = std::sqrt(std::abs(std::real((r.adjoint() * metric * r)(0, 0)))) ;
    if (nr > 0.0 && weights(n) > 0.0) v_bb.col(n) = r / nr * std::sqrt(p.p_max * weights(n));
  }
  return v_bb;
}

struct BcdState {
  CMat v_rf;
  CMat v_bb;
  CMat theta;
  AuxState aux;
};

inline Solution run_bcd(const SolveProblem& prob, const SolveOptions& opts, const CMat& v_rf_init,
                        const CMat& theta_init, const RVec& power_weights) {
  const int n_users = static_cast<int>(prob.h_lifted.size());
  const int k = static_cast<int>(prob.g.rows());

  BcdState st;
  st.v_rf = v_rf_init;
  st.theta = theta_init;
  EffectiveChannels hbar = effective_from_lifted(prob, st.theta);
  st.v_bb = matched_digital_init(prob, st.v_rf, hbar, power_weights);
  st.v_bb = enforce_power(st.v_rf, st.v_bb, prob.p_max);
  st.aux = update_aux(hbar, st.v_rf * st.v_bb, prob.noise);

  AnalogOptions analog_opts;
  analog_opts.max_sweeps = opts.analog_max_sweeps;
  ThetaOptions theta_opts;
  theta_opts.max_iters = opts.theta_max_iters;
  theta_opts.max_halvings = opts.theta_max_halvings;
  theta_opts.grad_tol = opts.theta_grad_tol_per_element * k;

  Solution sol;
  double f_prev = sum_rate(hbar, st.v_rf * st.v_bb, prob.noise);
  {
    OuterRecord rec;
    rec.surrogate = f_prev;
    rec.sum_rate = f_prev;
    rec.power = (st.v_rf * st.v_bb).squaredNorm();
    rec.c1_residual = (st.theta.adjoint() * st.theta - CMat::Identity(k, k)).norm();
    sol.trace.outer.push_back(rec);
  }

  double mu_warm = 1.0;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    const auto t0 = std::chrono::steady_clock::now();
    OuterRecord rec;

    // analog block, accepted only if the (power-repaired) candidate does not
    // lose surrogate value; C2 couples both factors, so the raw sweep alone
    // is not enough
    {
      const double f_cur =
          fp_objective(hbar, st.v_rf * st.v_bb, st.aux, prob.noise);
      AnalogResult cand = solve_analog_detailed(st.v_rf, st.v_bb, hbar, st.aux, prob.noise,
                                                analog_opts);
      CMat v_bb_cand = enforce_power(cand.v_rf, st.v_bb, prob.p_max);
      const double f_cand =
          fp_objective(hbar, cand.v_rf * v_bb_cand, st.aux, prob.noise);
      rec.analog_sweeps = cand.sweeps;
      if (f_cand >= f_cur) {
        st.v_rf = std::move(cand.v_rf);
        st.v_bb = std::move(v_bb_cand);
      }
    }

    // digital block: exact constrained maximizer; the guard only protects
    // against roundoff in near-converged states
    {
      const double f_cur = fp_objective(hbar, st.v_rf * st.v_bb, st.aux, prob.noise);
      CMat cand = solve_digital(st.v_rf, hbar, st.aux, prob.noise, prob.p_max);
      cand = enforce_power(st.v_rf, std::move(cand), prob.p_max);
      if (fp_objective(hbar, st.v_rf * cand, st.aux, prob.noise) >= f_cur)
        st.v_bb = std::move(cand);
    }

    // scattering block
    const CMat w = st.v_rf * st.v_bb;
    {
      TraceProblem tp = assemble_trace_problem(prob.g, prob.h_lifted, w, st.aux);
      ScatteringMatrix cur;
      cur.theta = st.theta;
      ThetaOptions to = theta_opts;
      to.mu0 = mu_warm;
      auto [theta_new, ttrace] = optimize_theta(tp, cur, to);
      st.theta = std::move(theta_new.theta);
      mu_warm = std::min(std::max(ttrace.mu, 1e-12), 1e12);
      rec.theta_iterations = ttrace.iterations;
      hbar = effective_from_lifted(prob, st.theta);
    }

    // auxiliaries last; F evaluated here equals the sum rate
    st.aux = update_aux(hbar, w, prob.noise);
    const double f_now = sum_rate(hbar, w, prob.noise);

    rec.surrogate = f_now;
    rec.sum_rate = f_now;
    rec.power = w.squaredNorm();
    rec.c1_residual = (st.theta.adjoint() * st.theta - CMat::Identity(k, k)).norm();
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0).count();
    sol.trace.outer.push_back(rec);

    if (std::abs(f_now - f_prev) < opts.eps_outer) {
      sol.converged = true;
      f_prev = f_now;
      break;
    }
    f_prev = f_now;
  }

  sol.precoder.v_rf = std::move(st.v_rf);
  sol.precoder.v_bb = std::move(st.v_bb);
  sol.theta.theta = std::move(st.theta);
  sol.aux = std::move(st.aux);
  sol.sum_rate = f_prev;
  (void)n_users;
  return sol;
}

inline Solution solve_problem(const SolveProblem& prob, const SolveOptions& opts) {
  const int n_users = static_cast<int>(prob.h_lifted.size());
  const int k = static_cast<int>(prob.g.rows());
  if (n_users == 0) throw std::invalid_argument("solve: no users");
  if (n_users > prob.m_rf)
    throw std::invalid_argument("solve: user count exceeds the number of RF chains");

  const CMat v_rf0 =
      random_phase_matrix(static_cast<int>(prob.g.cols()), prob.m_rf, substream(opts.seed, 0x5eed));
  CMat theta0(prob.theta_rows, k);
  if (prob.theta_rows == 2 * k) theta0 = ScatteringMatrix::hybrid_init(k).theta;
  else theta0 = ScatteringMatrix::single_mode_init(k).theta;

  const RVec bounds = sinr_upper_bounds(prob);
  RVec w_prop = bounds;
  const double total = w_prop.sum();
  if (total > 0.0) w_prop /= total;
  else w_prop.setConstant(1.0 / n_users);

  Solution best = run_bcd(prob, opts, v_rf0, theta0, w_prop);
  if (!opts.leader_restarts || n_users == 1) return best;

  for (int lead = 0; lead < n_users; ++lead) {
    // warm up: solve the single-user problem for the lead user so the
    // scattering matrix is aligned to it before competition starts
    SolveProblem single = prob;
    single.h_lifted = {prob.h_lifted[lead]};
    SolveOptions warm_opts = opts;
    warm_opts.max_outer = opts.warmup_outer;
    warm_opts.eps_outer = opts.warmup_eps;
    warm_opts.leader_restarts = false;
    RVec one = RVec::Ones(1);
    Solution warm = run_bcd(single, warm_opts, v_rf0, theta0, one);

    RVec w_lead = RVec::Constant(n_users, n_users > 1 ? 0.1 / (n_users - 1) : 0.0);
    w_lead(lead) = n_users > 1 ? 0.9 : 1.0;
    Solution cand = run_bcd(prob, opts, warm.precoder.v_rf, warm.theta.theta, w_lead);
    if (cand.sum_rate > best.sum_rate) best = std::move(cand);
  }
  return best;
}

}  // namespace detail

// Groups follow the config convention: users [0, N_r) reflective, rest transmissive.
inline std::vector<Group> groups_from_config(const SystemConfig& cfg) {
  std::vector<Group> g(cfg.n_users);
  for (int n = 0; n < cfg.n_users; ++n)
    g[n] = n < cfg.n_reflective ? Group::reflective : Group::transmissive;
  return g;
}

// Joint hybrid solve over the stacked scattering matrix.
inline Solution bcd_solve(const ChannelSet& channels, const std::vector<Group>& groups,
                          const SystemConfig& cfg, const SolveOptions& opts) {
  cfg.validate();
  if (static_cast<int>(channels.h.size()) != cfg.n_users ||
      static_cast<int>(groups.size()) != channels.h.size())
    throw std::invalid_argument("bcd_solve: channel/group count mismatch");

  detail::SolveProblem prob;
  prob.g = channels.G;
  prob.theta_rows = 2 * cfg.k_elements;
  prob.h_lifted = lift_users(channels.h, groups, prob.theta_rows);
  prob.noise.sigma2 = cfg.sigma2_w();
  prob.p_max = cfg.p_max_w();
  prob.m_rf = cfg.m_rf;
  return detail::solve_problem(prob, opts);
}

inline Solution bcd_solve(const ChannelSet& channels, const SystemConfig& cfg,
                          const SolveOptions& opts) {
  return bcd_solve(channels, groups_from_config(cfg), cfg, opts);
}

struct UserReport {
  double sinr = 0.0;
  double rate = 0.0;
};

struct ObjectiveReport {
  std::vector<UserReport> users;
  double sum_rate = 0.0;
};

// Recomputes SINRs and rates from the raw channels and the returned solution;
// nothing is read from cached trace values.
inline ObjectiveReport objective_report(const Solution& sol, const ChannelSet& channels,
                                        const std::vector<Group>& groups,
                                        const NoiseModel& noise) {
  noise.validate();
  const int k = static_cast<int>(channels.G.rows());
  const int rows = static_cast<int>(sol.theta.theta.rows());
  EffectiveChannels hbar;
  for (size_t n = 0; n < channels.h.size(); ++n) {
    CMat block;
    if (rows == 2 * k)
      block = (groups[n] == Group::reflective) ? sol.theta.theta.bottomRows(k)
                                               : sol.theta.theta.topRows(k);
    else
      block = sol.theta.theta;
    hbar.hbar.push_back(effective_channel(channels.h[n], block, channels.G));
  }
  const CMat w = sol.precoder.composite();
  const CMat s = coupling_matrix(hbar, w);
  ObjectiveReport rep;
  for (int n = 0; n < static_cast<int>(channels.h.size()); ++n) {
    UserReport u;
    u.sinr = sinr_from_coupling(s, n, noise);
    u.rate = std::log2(1.0 + u.sinr);
    rep.sum_rate += u.rate;
    rep.users.push_back(u);
  }
  return rep;
}

}  // namespace bdirs
