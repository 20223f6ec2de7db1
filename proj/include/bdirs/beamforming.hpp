#pragma once

// Hybrid beamforming blocks: the digital subproblem is an equality/inequality
// constrained concave quadratic solved in closed form through a spectral KKT
// system (robust to rank-deficient V_RF^H V_RF, which the analog stage
// routinely produces on line-of-sight channels), and the analog subproblem is
// exact per-entry phase coordinate ascent.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bdirs/fp_core.hpp"
#include "bdirs/types.hpp"

namespace bdirs {

struct HybridPrecoder {
  CMat v_rf;  // M x M_RF, unit-modulus entries
  CMat v_bb;  // M_RF x N

  CMat composite() const { return v_rf * v_bb; }
  double power() const { return composite().squaredNorm(); }

  double max_modulus_error() const {
    double e = 0.0;
    for (int i = 0; i < v_rf.rows(); ++i)
      for (int j = 0; j < v_rf.cols(); ++j) e = std::max(e, std::abs(std::abs(v_rf(i, j)) - 1.0));
    return e;
  }
};

struct DigitalSolution {
  CMat v_bb;
  double lambda = 0.0;    // KKT multiplier of the power constraint
  double power = 0.0;
  double kkt_residual = 0.0;
};

// Maximizes F over V_BB subject to ||V_RF V_BB||_F^2 <= p_max.
// Basis change: restrict to range(V_RF^H V_RF), whiten the power metric,
// diagonalize the quadratic form; the KKT power becomes the scalar function
// power(lambda) = sum_i g2_i / (lam_i + lambda)^2, bisected for lambda >= 0.
inline DigitalSolution solve_digital_detailed(const CMat& v_rf, const EffectiveChannels& hbar,
                                              const AuxState& aux, const NoiseModel& noise,
                                              double p_max) {
  noise.validate();
  const int m_rf = static_cast<int>(v_rf.cols());
  const int n_users = hbar.users();
  if (p_max <= 0.0) throw std::invalid_argument("solve_digital: p_max must be positive");

  CMat d(m_rf, n_users);
  CMat q = CMat::Zero(m_rf, m_rf);
  for (int n = 0; n < n_users; ++n) {
    const CVec r = v_rf.adjoint() * hbar.hbar[n];
    d.col(n) = std::sqrt(1.0 + aux.beta(n)) * aux.alpha(n) * r;
    q.noalias() += std::norm(aux.alpha(n)) * (r * r.adjoint());
  }

  DigitalSolution out;
  if (d.norm() == 0.0) {  // objective independent of V_BB: minimal-norm solution
    out.v_bb = CMat::Zero(m_rf, n_users);
    return out;
  }

  const CMat b_metric = v_rf.adjoint() * v_rf;
  Eigen::SelfAdjointEigenSolver<CMat> eig_b(b_metric);
  if (eig_b.info() != Eigen::Success)
    throw std::runtime_error("solve_digital: eigendecomposition of V_RF^H V_RF failed");
  const RVec sig = eig_b.eigenvalues();
  const double sig_max = sig.maxCoeff();
  std::vector<int> keep;
  for (int i = 0; i < sig.size(); ++i)
    if (sig(i) > sig_max * 1e-13) keep.push_back(i);
  if (keep.empty()) throw std::runtime_error("solve_digital: V_RF has numerically zero rank");

  CMat whiten(m_rf, static_cast<int>(keep.size()));  // b = whiten * e, power = ||e||^2
  for (size_t c = 0; c < keep.size(); ++c)
    whiten.col(c) = eig_b.eigenvectors().col(keep[c]) / std::sqrt(sig(keep[c]));

  CMat q_hat = whiten.adjoint() * q * whiten;
  q_hat = 0.5 * (q_hat + q_hat.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> eig_q(q_hat);
  if (eig_q.info() != Eigen::Success)
    throw std::runtime_error("solve_digital: eigendecomposition of the quadratic form failed");
  RVec lam = eig_q.eigenvalues().cwiseMax(0.0);
  const CMat g = eig_q.eigenvectors().adjoint() * (whiten.adjoint() * d);
  RVec g2(lam.size());
  for (int i = 0; i < lam.size(); ++i) g2(i) = g.row(i).squaredNorm();

  auto power_of = [&](double mu) {
    double p = 0.0;
    for (int i = 0; i < lam.size(); ++i) {
      const double den = lam(i) + mu;
      if (g2(i) > 0.0 && den <= 0.0) return std::numeric_limits<double>::infinity();
      if (g2(i) > 0.0) p += g2(i) / (den * den);
    }
    return p;
  };

  double mu = 0.0;
  if (power_of(0.0) > p_max) {
    double lo = 0.0, hi = 1.0;
    while (power_of(hi) > p_max) {
      hi *= 2.0;
      if (hi > 1e300) throw std::runtime_error("solve_digital: power bisection bracket overflow");
    }
    for (int it = 0; it < 500; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (power_of(mid) > p_max) lo = mid; else hi = mid;
      if (hi - lo <= 1e-14 * (1.0 + hi)) break;
      if (std::abs(power_of(hi) - p_max) <= 1e-12 * p_max) break;
    }
    mu = hi;
  }

  CMat e = g;
  for (int i = 0; i < lam.size(); ++i) e.row(i) /= (lam(i) + mu);
  out.v_bb = whiten * (eig_q.eigenvectors() * e);
  out.lambda = mu;
  out.power = (v_rf * out.v_bb).squaredNorm();
  out.kkt_residual = ((q + mu * b_metric) * out.v_bb - d).norm() / d.norm();
  return out;
}

inline CMat solve_digital(const CMat& v_rf, const EffectiveChannels& hbar, const AuxState& aux,
                          const NoiseModel& noise, double p_max) {
  return solve_digital_detailed(v_rf, hbar, aux, noise, p_max).v_bb;
}

// Exact maximizer of 2 Re{c x} over |x| = 1; a zero coefficient keeps the
// current entry.
inline Complex optimal_unimodular(Complex c, Complex current) {
  const double m = std::abs(c);
  if (m == 0.0) return current;
  return std::conj(c) / m;
}

struct AnalogOptions {
  int max_sweeps = 8;
  double tol = 1e-9;  // relative per-sweep F gain below which the sweep stops
};

struct AnalogResult {
  CMat v_rf;
  int sweeps = 0;
  double objective = 0.0;
};

// Cyclic coordinate ascent over the entries of V_RF at fixed V_BB. For a
// single entry x = V_RF(i,j) with |x| = 1 the objective reduces to
// 2 Re{c_ij x} + const, maximized in closed form; F never decreases.
inline AnalogResult solve_analog_detailed(CMat v_rf, const CMat& v_bb,
                                          const EffectiveChannels& hbar, const AuxState& aux,
                                          const NoiseModel& noise, const AnalogOptions& opts = {}) {
  noise.validate();
  const int m = static_cast<int>(v_rf.rows());
  const int m_rf = static_cast<int>(v_rf.cols());
  const int n_users = hbar.users();

  CMat h_stack(m, n_users);  // columns hbar_n
  for (int n = 0; n < n_users; ++n) h_stack.col(n) = hbar.hbar[n];

  CMat s = h_stack.adjoint() * (v_rf * v_bb);  // coupling S(n, n')
  CVec wgt(n_users);
  RVec a2(n_users);
  for (int n = 0; n < n_users; ++n) {
    wgt(n) = std::sqrt(1.0 + aux.beta(n)) * std::conj(aux.alpha(n));
    a2(n) = std::norm(aux.alpha(n));
  }

  auto objective = [&]() { return fp_objective_from_coupling(s, aux, noise); };

  AnalogResult out;
  double f = objective();
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    const double f0 = f;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m_rf; ++j) {
        // co(n, n') = conj(hbar_n[i]) * V_BB(j, n')
        Complex c = 0.0;
        for (int n = 0; n < n_users; ++n) {
          const Complex hi = std::conj(h_stack(i, n));
          c += wgt(n) * hi * v_bb(j, n);
          for (int np = 0; np < n_users; ++np) {
            const Complex co = hi * v_bb(j, np);
            const Complex rest = s(n, np) - v_rf(i, j) * co;
            c -= a2(n) * co * std::conj(rest);
          }
        }
        const Complex x = optimal_unimodular(c, v_rf(i, j));
        if (x != v_rf(i, j)) {
          const Complex dx = x - v_rf(i, j);
          for (int n = 0; n < n_users; ++n) {
            const Complex hi = std::conj(h_stack(i, n));
            for (int np = 0; np < n_users; ++np) s(n, np) += dx * hi * v_bb(j, np);
          }
          v_rf(i, j) = x;
        }
      }
    }
    f = objective();
    out.sweeps = sweep + 1;
    if (f - f0 <= opts.tol * (1.0 + std::abs(f0))) break;
  }
  out.v_rf = std::move(v_rf);
  out.objective = f;
  return out;
}

inline CMat solve_analog(const CMat& v_rf, const CMat& v_bb, const EffectiveChannels& hbar,
                         const AuxState& aux, const NoiseModel& noise,
                         const AnalogOptions& opts = {}) {
  return solve_analog_detailed(v_rf, v_bb, hbar, aux, noise, opts).v_rf;
}

// Rescales V_BB so that ||V_RF V_BB||_F^2 <= p_max; feasible inputs pass through.
inline CMat enforce_power(const CMat& v_rf, CMat v_bb, double p_max) {
  const double p = (v_rf * v_bb).squaredNorm();
  if (p > p_max) v_bb *= std::sqrt(p_max / p);
  return v_bb;
}

}  // namespace bdirs
