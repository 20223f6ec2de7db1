#include <gtest/gtest.h>

#include <cmath>

#include "bdirs/manifold.hpp"
#include "test_support.hpp"

using namespace bdirs;
using test::random_cmat;
using test::random_cvec;
using test::random_orthonormal;
using test::random_psd;
using test::random_skew_hermitian;

namespace {

TraceProblem random_problem(SplitMix64& gen, int k, int p_rows) {
  TraceProblem prob;
  prob.x = random_cmat(gen, k, p_rows);
  prob.y = random_psd(gen, k);
  prob.z = random_psd(gen, p_rows);
  return prob;
}

}  // namespace

TEST(Assemble, ZeroAlphaZeroesLinearAndZTerms) {
  SplitMix64 gen(1);
  const auto inst = test::random_fp_instance(gen, 2, 3, 4);
  AuxState aux = AuxState::zeros(2);
  aux.beta = RVec::Ones(2);
  const auto prob = assemble_trace_problem(inst.channels, inst.groups, inst.w, aux);
  EXPECT_DOUBLE_EQ(prob.x.norm(), 0.0);
  EXPECT_DOUBLE_EQ(prob.z.norm(), 0.0);
  // problem value constant in Theta
  const CMat t1 = random_orthonormal(gen, 6, 3);
  const CMat t2 = random_orthonormal(gen, 6, 3);
  EXPECT_NEAR(trace_objective(prob, t1), trace_objective(prob, t2), 1e-12);
}

TEST(Assemble, EmptyGroupZeroesItsBlocks) {
  // one reflective user, K = 2: the transmissive blocks X_t, Z_t vanish
  SplitMix64 gen(2);
  ChannelSet channels;
  channels.G = random_cmat(gen, 2, 3);
  channels.h = {random_cvec(gen, 2)};
  const std::vector<Group> groups = {Group::reflective};
  const CMat w = random_cmat(gen, 3, 1);
  AuxState aux;
  aux.beta = RVec::Ones(1);
  aux.alpha = CVec::Constant(1, Complex(0.7, -0.2));
  const auto prob = assemble_trace_problem(channels, groups, w, aux);
  EXPECT_DOUBLE_EQ(prob.x.leftCols(2).norm(), 0.0);        // X_t
  EXPECT_DOUBLE_EQ(prob.z.topLeftCorner(2, 2).norm(), 0.0); // Z_t
  EXPECT_GT(prob.x.rightCols(2).norm(), 0.0);               // X_r populated
  EXPECT_GT(prob.z.bottomRightCorner(2, 2).norm(), 0.0);
}

TEST(Assemble, ConsistentWithFpObjective) {
  // trace form + Theta-independent terms reproduces the surrogate
  SplitMix64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = test::random_fp_instance(gen, 2, 2, 3);
    const AuxState aux = update_aux(inst.hbar, inst.w, inst.noise);
    const auto prob = assemble_trace_problem(inst.channels, inst.groups, inst.w, aux);
    const double f_trace = trace_objective(prob, inst.theta.theta);

    double log_terms = 0.0, beta_sum = 0.0, alpha2 = 0.0;
    for (int n = 0; n < 2; ++n) {
      log_terms += std::log2(1.0 + aux.beta(n));
      beta_sum += aux.beta(n);
      alpha2 += std::norm(aux.alpha(n));
    }
    const double f_rebuilt =
        log_terms + (-beta_sum - f_trace - inst.noise.sigma2 * alpha2) / kLn2;
    const double f_direct = fp_objective(inst.hbar, inst.w, aux, inst.noise);
    EXPECT_NEAR(f_rebuilt, f_direct, 1e-9 * (1.0 + std::abs(f_direct)));
  }
}

TEST(Gradient, ZeroProblemGivesZero) {
  TraceProblem prob;
  prob.x = CMat::Zero(2, 4);
  prob.y = CMat::Zero(2, 2);
  prob.z = CMat::Zero(4, 4);
  SplitMix64 gen(4);
  EXPECT_DOUBLE_EQ(euclidean_gradient(prob, random_orthonormal(gen, 4, 2)).norm(), 0.0);
}

TEST(Gradient, IdentityCase) {
  TraceProblem prob;
  prob.x = CMat::Zero(3, 6);
  prob.y = CMat::Identity(3, 3);
  prob.z = CMat::Identity(6, 6);
  SplitMix64 gen(5);
  const CMat theta = random_orthonormal(gen, 6, 3);
  EXPECT_NEAR((euclidean_gradient(prob, theta) - 2.0 * theta).norm(), 0.0, 1e-12);
}

TEST(Gradient, MatchesCentralFiniteDifferences) {
  SplitMix64 gen(6);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 2 + trial % 3;
    const auto prob = random_problem(gen, k, 2 * k);
    const CMat theta = random_orthonormal(gen, 2 * k, k);
    const CMat grad = euclidean_gradient(prob, theta);
    const double h = 1e-6;
    double max_rel = 0.0;
    for (int i = 0; i < 2 * k; ++i) {
      for (int j = 0; j < k; ++j) {
        CMat e = CMat::Zero(2 * k, k);
        e(i, j) = 1.0;
        const double fd_re =
            (trace_objective(prob, theta + h * e) - trace_objective(prob, theta - h * e)) /
            (2 * h);
        const double fd_im = (trace_objective(prob, theta + Complex(0, h) * e) -
                              trace_objective(prob, theta - Complex(0, h) * e)) /
                             (2 * h);
        const double scale = std::max(1.0, std::abs(grad(i, j)));
        max_rel = std::max(max_rel, std::abs(fd_re - grad(i, j).real()) / scale);
        max_rel = std::max(max_rel, std::abs(fd_im - grad(i, j).imag()) / scale);
      }
    }
    EXPECT_LE(max_rel, 1e-5);
  }
}

TEST(RiemannianDirection, ZeroGradient) {
  SplitMix64 gen(7);
  const CMat theta = random_orthonormal(gen, 4, 2);
  EXPECT_DOUBLE_EQ(riemannian_direction(CMat::Zero(4, 2), theta).norm(), 0.0);
}

TEST(RiemannianDirection, SkewHermitian) {
  SplitMix64 gen(8);
  for (int trial = 0; trial < 20; ++trial) {
    const CMat theta = random_orthonormal(gen, 6, 3);
    const CMat grad = random_cmat(gen, 6, 3);
    const CMat j = riemannian_direction(grad, theta);
    EXPECT_LE((j + j.adjoint()).norm(), 1e-12 * std::max(1.0, j.norm()));
  }
}

TEST(RiemannianDirection, DescentDirection) {
  SplitMix64 gen(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto prob = random_problem(gen, 3, 6);
    const CMat theta = random_orthonormal(gen, 6, 3);
    const CMat grad = euclidean_gradient(prob, theta);
    const CMat j = riemannian_direction(grad, theta);
    if (j.norm() < 1e-8) continue;
    const double t = 1e-7 / j.norm();
    const double f0 = trace_objective(prob, theta);
    const double f1 = trace_objective(prob, retract(theta - t * (j * theta)));
    EXPECT_LE(f1 - f0, 1e-12 * (1.0 + std::abs(f0)));
  }
}

TEST(Rotation, ZeroStepIsIdentity) {
  SplitMix64 gen(10);
  const CMat j = random_skew_hermitian(gen, 5);
  EXPECT_NEAR((rotation(j, 0.0) - CMat::Identity(5, 5)).norm(), 0.0, 1e-15);
}

TEST(Rotation, ZeroDirectionIsIdentity) {
  EXPECT_NEAR((rotation(CMat::Zero(4, 4), 0.7) - CMat::Identity(4, 4)).norm(), 0.0, 1e-15);
}

TEST(Rotation, FourthOrderErrorAgainstExpm) {
  SplitMix64 gen(11);
  for (int trial = 0; trial < 10; ++trial) {
    CMat j = random_skew_hermitian(gen, 6);
    j /= j.norm();
    const double mu = 0.1;
    const double e1 = (rotation(j, mu) - test::expm_oracle((-mu * j).eval())).norm();
    const double e2 = (rotation(j, mu / 2) - test::expm_oracle((-mu / 2 * j).eval())).norm();
    EXPECT_GE(e1 / e2, 12.0);
    EXPECT_LE(e1 / e2, 20.0);
  }
}

TEST(Retract, IdempotentOnFeasiblePoints) {
  SplitMix64 gen(12);
  const CMat theta = random_orthonormal(gen, 6, 3);
  EXPECT_NEAR((retract(theta) - theta).norm(), 0.0, 1e-12);
}

TEST(Retract, RemovesScaling) {
  SplitMix64 gen(13);
  const CMat theta = random_orthonormal(gen, 6, 3);
  EXPECT_NEAR((retract((2.0 * theta).eval()) - theta).norm(), 0.0, 1e-12);
}

TEST(Retract, ProjectsPerturbedInputs) {
  SplitMix64 gen(14);
  for (int trial = 0; trial < 20; ++trial) {
    const CMat theta = random_orthonormal(gen, 8, 4) + 0.1 * random_cmat(gen, 8, 4);
    const CMat out = retract(theta);
    EXPECT_LE((out.adjoint() * out - CMat::Identity(4, 4)).norm(), 1e-12);
  }
}

TEST(Retract, RejectsRankDeficientInput) {
  SplitMix64 gen(15);
  CMat theta = random_cmat(gen, 6, 3);
  theta.col(2) = theta.col(1);
  EXPECT_THROW(retract(theta), std::runtime_error);
}

TEST(OptimizeTheta, StationaryAtZeroProblem) {
  SplitMix64 gen(16);
  TraceProblem prob;
  prob.x = CMat::Zero(3, 6);
  prob.y = random_psd(gen, 3);  // Y alone cannot move the objective when Z = 0
  prob.z = CMat::Zero(6, 6);
  const auto init = ScatteringMatrix::hybrid_init(3);
  const auto [theta, trace] = optimize_theta(prob, init);
  EXPECT_EQ(trace.gradient_evals, 1);
  EXPECT_TRUE(trace.converged);
  EXPECT_NEAR((theta.theta - init.theta).norm(), 0.0, 1e-15);
}

TEST(OptimizeTheta, MatchesGridSearchAtK1) {
  SplitMix64 gen(17);
  int hits = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto prob = random_problem(gen, 1, 2);
    ThetaOptions opts;
    opts.grad_tol = 1e-14;
    opts.max_iters = 2000;
    const auto [theta, trace] = optimize_theta(prob, ScatteringMatrix::hybrid_init(1), opts);
    const double f_grid = test::grid_search_k1(prob);
    EXPECT_LE(trace.final_objective, f_grid + 1e-4 * (1.0 + std::abs(f_grid)));
    if (std::abs(trace.final_objective - f_grid) <= 1e-4 * (1.0 + std::abs(f_grid))) ++hits;
  }
  EXPECT_EQ(hits, 20);
}

TEST(OptimizeTheta, MonotoneAndNearStationaryAtK3) {
  SplitMix64 gen(18);
  for (int trial = 0; trial < 5; ++trial) {
    const auto prob = random_problem(gen, 3, 6);
    ThetaOptions opts;
    opts.grad_tol = 1e-6 * 3;
    opts.max_iters = 500;
    const auto [theta, trace] = optimize_theta(prob, ScatteringMatrix::hybrid_init(3), opts);
    for (size_t i = 1; i < trace.objective_values.size(); ++i)
      EXPECT_LE(trace.objective_values[i], trace.objective_values[i - 1] + 1e-10);
    if (trace.converged) EXPECT_LE(trace.final_grad_norm_sq, 10.0 * opts.grad_tol);
    ScatteringMatrix out = theta;
    EXPECT_LE(out.constraint_residual(), 1e-8);
  }
}

TEST(OptimizeTheta, FeasibilityAfterEveryStepViaResidual) {
  SplitMix64 gen(19);
  const auto prob = random_problem(gen, 4, 8);
  ThetaOptions opts;
  opts.max_iters = 50;
  const auto [theta, trace] = optimize_theta(prob, ScatteringMatrix::hybrid_init(4), opts);
  ScatteringMatrix out = theta;
  EXPECT_LE(out.constraint_residual(), 1e-8);
}
