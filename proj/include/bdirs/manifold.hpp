#pragma once

// Scattering-matrix optimization on the manifold {Theta : Theta^H Theta = I}.
// The subproblem min Tr(Theta Y Theta^H Z) - 2 Re Tr(Theta X) is driven by
// rotation updates exp(-mu J) truncated at third order, with J the
// skew-Hermitian Riemannian direction, followed by a polar retraction that
// removes the truncation drift. Step sizes adapt by doubling/halving against
// the retracted objective, so the accepted sequence is non-increasing.

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bdirs/channel.hpp"
#include "bdirs/fp_core.hpp"
#include "bdirs/types.hpp"

namespace bdirs {

// Stacked scattering matrix. Hybrid mode stacks the transmissive block on
// top of the reflective block (rows [0, K) and [K, 2K)); single-mode solves
// use rows == K with one active block.
struct ScatteringMatrix {
  CMat theta;  // P x K with P in {K, 2K}

  int elements() const { return static_cast<int>(theta.cols()); }
  bool stacked() const { return theta.rows() == 2 * theta.cols(); }

  CMat block_t() const { return stacked() ? theta.topRows(elements()) : theta; }
  CMat block_r() const { return stacked() ? theta.bottomRows(elements()) : theta; }

  // || Theta^H Theta - I ||_F
  double constraint_residual() const {
    const int k = elements();
    return (theta.adjoint() * theta - CMat::Identity(k, k)).norm();
  }

  static ScatteringMatrix hybrid_init(int k) {
    ScatteringMatrix s;
    s.theta = CMat(2 * k, k);
    s.theta.topRows(k) = CMat::Identity(k, k) / std::sqrt(2.0);
    s.theta.bottomRows(k) = CMat::Identity(k, k) / std::sqrt(2.0);
    return s;
  }

  static ScatteringMatrix single_mode_init(int k) {
    ScatteringMatrix s;
    s.theta = CMat::Identity(k, k);
    return s;
  }
};

struct TraceProblem {
  CMat x;  // K x P
  CMat y;  // K x K, Hermitian PSD
  CMat z;  // P x P, Hermitian PSD
};

inline double trace_objective(const TraceProblem& p, const CMat& theta) {
  // Tr(Theta Y Theta^H Z) - 2 Re Tr(Theta X)
  const CMat ty = theta * p.y;
  const double quad = std::real(((theta.adjoint() * (p.z * ty))).trace());
  const double lin = std::real((p.x * theta).trace());
  return quad - 2.0 * lin;
}

// Per-user row offsets into the stacked Theta: transmissive users couple to
// rows [0, K), reflective users to rows [K, 2K). Single-mode problems pass
// theta_rows == K and every offset is zero.
inline std::vector<CVec> lift_users(const std::vector<CVec>& h, const std::vector<Group>& group,
                                    int theta_rows) {
  if (h.size() != group.size()) throw std::invalid_argument("lift_users: size mismatch");
  std::vector<CVec> lifted;
  lifted.reserve(h.size());
  for (size_t n = 0; n < h.size(); ++n) {
    const int k = static_cast<int>(h[n].size());
    CVec v = CVec::Zero(theta_rows);
    int off = 0;
    if (theta_rows == 2 * k) off = (group[n] == Group::reflective) ? k : 0;
    else if (theta_rows != k) throw std::invalid_argument("lift_users: bad theta_rows");
    v.segment(off, k) = h[n];
    lifted.push_back(std::move(v));
  }
  return lifted;
}

// X = sum_n sqrt(1+beta_n) conj(alpha_n) (G w_n) hhat_n^H   (K x P)
// Y = sum_n (G w_n)(G w_n)^H                                 (K x K)
// Z = sum_n |alpha_n|^2 hhat_n hhat_n^H                      (P x P)
// With block-lifted hhat these are exactly the stacked [X_t, X_r] and
// blkdiag(Z_t, Z_r) forms; the interference sum in Y runs over all users.
inline TraceProblem assemble_trace_problem(const CMat& g, const std::vector<CVec>& h_lifted,
                                           const CMat& w, const AuxState& aux) {
  const int k = static_cast<int>(g.rows());
  const int n_users = static_cast<int>(h_lifted.size());
  if (w.cols() != n_users) throw std::invalid_argument("assemble_trace_problem: W column mismatch");
  const int p_rows = n_users > 0 ? static_cast<int>(h_lifted[0].size()) : k;

  TraceProblem prob;
  prob.x = CMat::Zero(k, p_rows);
  prob.y = CMat::Zero(k, k);
  prob.z = CMat::Zero(p_rows, p_rows);
  for (int n = 0; n < n_users; ++n) {
    const CVec gw = g * w.col(n);
    prob.x.noalias() +=
        std::sqrt(1.0 + aux.beta(n)) * std::conj(aux.alpha(n)) * (gw * h_lifted[n].adjoint());
    prob.y.noalias() += gw * gw.adjoint();
    prob.z.noalias() += std::norm(aux.alpha(n)) * (h_lifted[n] * h_lifted[n].adjoint());
  }
  return prob;
}

// Hybrid-mode wrapper over the raw channels.
inline TraceProblem assemble_trace_problem(const ChannelSet& channels,
                                           const std::vector<Group>& group, const CMat& w,
                                           const AuxState& aux) {
  const int k = static_cast<int>(channels.G.rows());
  return assemble_trace_problem(channels.G, lift_users(channels.h, group, 2 * k), w, aux);
}

// grad = 2 Z Theta Y - 2 X^H
inline CMat euclidean_gradient(const TraceProblem& p, const CMat& theta) {
  if (p.z.rows() != theta.rows() || p.y.rows() != theta.cols())
    throw std::invalid_argument("euclidean_gradient: dimension mismatch");
  return 2.0 * (p.z * (theta * p.y)) - 2.0 * p.x.adjoint();
}

// J = grad Theta^H - Theta grad^H, skew-Hermitian by construction.
inline CMat riemannian_direction(const CMat& grad, const CMat& theta) {
  if (grad.rows() != theta.rows() || grad.cols() != theta.cols())
    throw std::invalid_argument("riemannian_direction: dimension mismatch");
  CMat j = grad * theta.adjoint();
  j -= j.adjoint().eval();
  return j;
}

// Third-order truncation of exp(-mu J).
inline CMat rotation(const CMat& j, double mu) {
  if (mu < 0.0) throw std::invalid_argument("rotation: mu must be >= 0");
  const CMat mj = mu * j;
  const CMat mj2 = mj * mj;
  return CMat::Identity(j.rows(), j.cols()) - mj + 0.5 * mj2 - (mj2 * mj) / 6.0;
}

// Polar retraction Theta (Theta^H Theta)^{-1/2}; idempotent on feasible points.
inline CMat retract(const CMat& theta_raw) {
  const CMat gram = theta_raw.adjoint() * theta_raw;
  Eigen::SelfAdjointEigenSolver<CMat> eig(gram);
  if (eig.info() != Eigen::Success) throw std::runtime_error("retract: eigendecomposition failed");
  const RVec ev = eig.eigenvalues();
  if (ev.minCoeff() <= ev.maxCoeff() * 1e-26 || ev.maxCoeff() <= 0.0)
    throw std::runtime_error("retract: rank-deficient input");
  RVec inv_sqrt(ev.size());
  for (int i = 0; i < ev.size(); ++i) inv_sqrt(i) = 1.0 / std::sqrt(ev(i));
  return theta_raw *
         (eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().adjoint());
}

struct ThetaOptions {
  double mu0 = 1.0;
  double grad_tol = 1e-6;  // threshold on ||J||_F^2; callers usually scale by K
  int max_iters = 500;
  int max_halvings = 30;
};

struct ThetaTrace {
  int iterations = 0;
  int gradient_evals = 0;
  bool converged = false;  // ||J||_F^2 reached grad_tol
  double final_objective = 0.0;
  double final_grad_norm_sq = 0.0;
  double mu = 1.0;  // last accepted step size, reusable as warm start
  std::vector<double> objective_values;
};

// Rotation-update minimization of the trace objective. Candidate points are
// retracted before comparison, so accepted objectives are non-increasing and
// every accepted iterate satisfies the manifold constraint.
inline std::pair<ScatteringMatrix, ThetaTrace> optimize_theta(const TraceProblem& prob,
                                                              const ScatteringMatrix& theta_init,
                                                              const ThetaOptions& opts = {}) {
  CMat theta = theta_init.theta;
  ThetaTrace trace;
  trace.mu = opts.mu0;
  double f = trace_objective(prob, theta);
  trace.objective_values.push_back(f);

  double mu = opts.mu0;
  for (int it = 0; it < opts.max_iters; ++it) {
    const CMat grad = euclidean_gradient(prob, theta);
    const CMat j = riemannian_direction(grad, theta);
    ++trace.gradient_evals;
    trace.final_grad_norm_sq = j.squaredNorm();
    if (trace.final_grad_norm_sq <= opts.grad_tol) {
      trace.converged = true;
      break;
    }
    trace.iterations = it + 1;

    const CMat j2 = j * j;
    const CMat j3 = j2 * j;
    const int p_rows = static_cast<int>(theta.rows());
    const CMat eye = CMat::Identity(p_rows, p_rows);

    bool accepted = false;
    for (int halving = 0; halving < opts.max_halvings; ++halving) {
      const CMat r = eye - mu * j + (mu * mu / 2.0) * j2 - (mu * mu * mu / 6.0) * j3;
      const CMat r_theta = retract(r * theta);
      const CMat u_theta = retract(r * (r * theta));
      const double f_r = trace_objective(prob, r_theta);
      const double f_u = trace_objective(prob, u_theta);
      if (f_u < f_r && f_u < f) {
        theta = u_theta;
        f = f_u;
        mu *= 2.0;
        accepted = true;
        break;
      }
      if (f_r < f) {
        theta = r_theta;
        f = f_r;
        accepted = true;
        break;
      }
      mu *= 0.5;
    }
    if (!accepted) break;  // no descent step available at the smallest mu
    trace.objective_values.push_back(f);
  }

  trace.final_objective = f;
  trace.mu = mu;
  ScatteringMatrix out;
  out.theta = std::move(theta);
  return {std::move(out), std::move(trace)};
}

}  // namespace bdirs
