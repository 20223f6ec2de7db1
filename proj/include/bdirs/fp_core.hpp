#pragma once

// SINR, sum rate, the quadratic-transform surrogate of the sum-rate
// objective, and the closed-form auxiliary updates that make the surrogate
// tight. The surrogate keeps log2 rate terms; the linear/quadratic terms
// carry a 1/ln2 factor so that beta_n = gamma_n and the alpha update are
// exact coordinate maximizers (they are derived from the natural-log
// transform) while the value still equals the sum rate in bits at the
// updated auxiliaries.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bdirs/types.hpp"

namespace bdirs {

inline constexpr double kLn2 = 0.6931471805599453094172321;

struct NoiseModel {
  double sigma2 = 0.0;  // watts over the operating bandwidth

  void validate() const {
    if (sigma2 <= 0.0) throw std::invalid_argument("noise: sigma2 must be positive");
  }
};

struct AuxState {
  RVec beta;   // N, beta_n >= 0
  CVec alpha;  // N

  static AuxState zeros(int n) {
    AuxState a;
    a.beta = RVec::Zero(n);
    a.alpha = CVec::Zero(n);
    return a;
  }
};

struct EffectiveChannels {
  std::vector<CVec> hbar;  // per user, length M

  int users() const { return static_cast<int>(hbar.size()); }
};

// hbar_n = (h_n^H Theta_i G)^H
inline CVec effective_channel(const CVec& h_n, const CMat& theta_i, const CMat& g) {
  if (theta_i.rows() != h_n.size() || theta_i.cols() != g.rows())
    throw std::invalid_argument("effective_channel: dimension mismatch");
  return g.adjoint() * (theta_i.adjoint() * h_n);
}

// S(n, m) = hbar_n^H w_m; the diagonal is the useful signal, the rest interference.
inline CMat coupling_matrix(const EffectiveChannels& hbar, const CMat& w) {
  const int n_users = hbar.users();
  if (w.cols() != n_users) throw std::invalid_argument("coupling_matrix: W has wrong column count");
  CMat s(n_users, n_users);
  for (int n = 0; n < n_users; ++n) {
    if (hbar.hbar[n].size() != w.rows())
      throw std::invalid_argument("coupling_matrix: dimension mismatch");
    s.row(n) = hbar.hbar[n].adjoint() * w;
  }
  return s;
}

inline double sinr_from_coupling(const CMat& s, int n, const NoiseModel& noise) {
  double interference = 0.0;
  for (int m = 0; m < s.cols(); ++m)
    if (m != n) interference += std::norm(s(n, m));
  return std::norm(s(n, n)) / (interference + noise.sigma2);
}

inline double sinr(int n, const EffectiveChannels& hbar, const CMat& w, const NoiseModel& noise) {
  noise.validate();
  if (n < 0 || n >= hbar.users()) throw std::invalid_argument("sinr: user index out of range");
  return sinr_from_coupling(coupling_matrix(hbar, w), n, noise);
}

inline double sum_rate_from_coupling(const CMat& s, const NoiseModel& noise) {
  double rate = 0.0;
  for (int n = 0; n < s.rows(); ++n) rate += std::log2(1.0 + sinr_from_coupling(s, n, noise));
  return rate;
}

inline double sum_rate(const EffectiveChannels& hbar, const CMat& w, const NoiseModel& noise) {
  noise.validate();
  return sum_rate_from_coupling(coupling_matrix(hbar, w), noise);
}

// F = sum_n [ log2(1+beta_n) + (-beta_n + Gamma_n - Xi_n) / ln 2 ] with
//   Gamma_n = 2 sqrt(1+beta_n) Re{ conj(alpha_n) hbar_n^H w_n }
//   Xi_n    = |alpha_n|^2 ( sum_{n'} |hbar_n^H w_{n'}|^2 + sigma^2 )
// The interference sum in Xi_n runs over all n' including n; with that
// convention F equals the sum rate exactly at the optimal auxiliaries.
inline double fp_objective_from_coupling(const CMat& s, const AuxState& aux,
                                         const NoiseModel& noise) {
  const int n_users = static_cast<int>(s.rows());
  double f = 0.0;
  for (int n = 0; n < n_users; ++n) {
    double quad = noise.sigma2;
    for (int m = 0; m < n_users; ++m) quad += std::norm(s(n, m));
    const double gamma_term =
        2.0 * std::sqrt(1.0 + aux.beta(n)) * std::real(std::conj(aux.alpha(n)) * s(n, n));
    const double xi_term = std::norm(aux.alpha(n)) * quad;
    f += std::log2(1.0 + aux.beta(n)) + (-aux.beta(n) + gamma_term - xi_term) / kLn2;
  }
  return f;
}

inline double fp_objective(const EffectiveChannels& hbar, const CMat& w, const AuxState& aux,
                           const NoiseModel& noise) {
  noise.validate();
  if (aux.beta.size() != hbar.users() || aux.alpha.size() != hbar.users())
    throw std::invalid_argument("fp_objective: aux has wrong length");
  return fp_objective_from_coupling(coupling_matrix(hbar, w), aux, noise);
}

// beta_n* = gamma_n
inline RVec update_beta_from_coupling(const CMat& s, const NoiseModel& noise) {
  RVec beta(s.rows());
  for (int n = 0; n < s.rows(); ++n) beta(n) = sinr_from_coupling(s, n, noise);
  return beta;
}

inline RVec update_beta(const EffectiveChannels& hbar, const CMat& w, const NoiseModel& noise) {
  noise.validate();
  return update_beta_from_coupling(coupling_matrix(hbar, w), noise);
}

// alpha_n* = sqrt(1+beta_n) hbar_n^H w_n / ( sum_{n'} |hbar_n^H w_{n'}|^2 + sigma^2 )
inline CVec update_alpha_from_coupling(const CMat& s, const RVec& beta, const NoiseModel& noise) {
  const int n_users = static_cast<int>(s.rows());
  CVec alpha(n_users);
  for (int n = 0; n < n_users; ++n) {
    double den = noise.sigma2;
    for (int m = 0; m < n_users; ++m) den += std::norm(s(n, m));
    alpha(n) = std::sqrt(1.0 + beta(n)) * s(n, n) / den;
  }
  return alpha;
}

inline CVec update_alpha(const EffectiveChannels& hbar, const CMat& w, const RVec& beta,
                         const NoiseModel& noise) {
  noise.validate();
  if (beta.minCoeff() < 0.0) throw std::invalid_argument("update_alpha: beta must be >= 0");
  return update_alpha_from_coupling(coupling_matrix(hbar, w), beta, noise);
}

inline AuxState update_aux(const EffectiveChannels& hbar, const CMat& w, const NoiseModel& noise) {
  const CMat s = coupling_matrix(hbar, w);
  AuxState aux;
  aux.beta = update_beta_from_coupling(s, noise);
  aux.alpha = update_alpha_from_coupling(s, aux.beta, noise);
  return aux;
}

}  // namespace bdirs
