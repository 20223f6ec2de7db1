#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "bdirs/channel.hpp"
#include "test_support.hpp"

using namespace bdirs;

namespace {

AbsorptionTable two_knots() {
  AbsorptionTable t;
  t.entries = {{0.1e12, 0.005}, {1.0e12, 0.05}};
  return t;
}

// independent piecewise-linear reference
double lerp_oracle(const AbsorptionTable& t, double f) {
  for (size_t i = 1; i < t.entries.size(); ++i) {
    const auto [f0, v0] = t.entries[i - 1];
    const auto [f1, v1] = t.entries[i];
    if (f >= f0 && f <= f1) return v0 + (f - f0) * (v1 - v0) / (f1 - f0);
  }
  return std::nan("");
}

}  // namespace

TEST(Absorption, ExactKnot) {
  EXPECT_DOUBLE_EQ(absorption_coefficient(two_knots(), 0.1e12), 0.005);
  EXPECT_DOUBLE_EQ(absorption_coefficient(two_knots(), 1.0e12), 0.05);
}

TEST(Absorption, Midpoint) {
  EXPECT_NEAR(absorption_coefficient(two_knots(), 0.55e12), 0.0275, 1e-15);
}

TEST(Absorption, ThreeKnotSegment) {
  AbsorptionTable t;
  t.entries = {{0.1e12, 0.004}, {0.4e12, 0.02}, {0.9e12, 0.11}};
  for (double f : {0.45e12, 0.6e12, 0.89e12}) {
    EXPECT_NEAR(absorption_coefficient(t, f), lerp_oracle(t, f), 1e-15);
  }
}

TEST(Absorption, NoExtrapolation) {
  EXPECT_THROW(absorption_coefficient(two_knots(), 0.0999e12), std::out_of_range);
  EXPECT_THROW(absorption_coefficient(two_knots(), 1.0001e12), std::out_of_range);
}

TEST(Absorption, ValidationRejectsBadTables) {
  AbsorptionTable t;
  t.entries = {{0.5e12, 0.01}};
  EXPECT_THROW(t.validate(), std::invalid_argument);
  t.entries = {{0.5e12, 0.01}, {0.4e12, 0.02}};
  EXPECT_THROW(t.validate(), std::invalid_argument);
  t.entries = {{0.4e12, -0.01}, {0.5e12, 0.02}};
  EXPECT_THROW(t.validate(), std::invalid_argument);
}

TEST(Absorption, BuiltinCoversBand) {
  const auto t = AbsorptionTable::builtin();
  t.validate();
  EXPECT_LE(t.entries.front().first, 0.1e12);
  EXPECT_GE(t.entries.back().first, 1.0e12);
}

TEST(Absorption, FromFileParsesCommentsAndColumns) {
  const std::string path = ::testing::TempDir() + "tau.txt";
  {
    std::ofstream out(path);
    out << "# frequency_Hz tau_per_m\n";
    out << "0.1e12 0.005\n";
    out << "0.5e12 0.03   # mid knot\n";
    out << "\n";
    out << "1.0e12 0.2\n";
  }
  const auto t = AbsorptionTable::from_file(path);
  ASSERT_EQ(t.entries.size(), 3u);
  EXPECT_DOUBLE_EQ(t.entries[1].second, 0.03);
  EXPECT_NEAR(absorption_coefficient(t, 0.3e12), lerp_oracle(t, 0.3e12), 1e-15);
  std::remove(path.c_str());
}

TEST(PathGain, UnitAtCancellationDistance) {
  const double f = 0.3e12;
  const double d = kSpeedOfLight / (4.0 * M_PI * f);
  EXPECT_NEAR(path_gain(f, d, 0.0), 1.0, 1e-12);
}

TEST(PathGain, FrozenValues) {
  // c / (4 pi f d) at f = 0.3 THz, d = 50 m, evaluated with c = 299792458
  EXPECT_NEAR(path_gain(0.3e12, 50.0, 0.0), 1.590448386412314e-06, 1e-18);
  // absorption factor exp(-tau d / 2) with tau = 0.01
  EXPECT_NEAR(path_gain(0.3e12, 50.0, 0.01), 1.2386424487725626e-06, 1e-18);
  EXPECT_NEAR(path_gain(0.3e12, 50.0, 0.01) / path_gain(0.3e12, 50.0, 0.0), std::exp(-0.25),
              1e-12);
}

TEST(PathGain, StrictlyDecreasingInDistanceAndAbsorption) {
  for (int i = 1; i < 40; ++i) {
    EXPECT_LT(path_gain(0.3e12, 5.0 + i, 0.01), path_gain(0.3e12, 5.0 + i - 1, 0.01));
    EXPECT_LT(path_gain(0.3e12, 20.0, 0.002 * i), path_gain(0.3e12, 20.0, 0.002 * (i - 1)));
  }
}

TEST(PathGain, DomainErrors) {
  EXPECT_THROW(path_gain(0.0, 10.0, 0.0), std::domain_error);
  EXPECT_THROW(path_gain(0.3e12, 0.0, 0.0), std::domain_error);
  EXPECT_THROW(path_gain(0.3e12, -3.0, 0.0), std::domain_error);
  EXPECT_THROW(path_gain(0.3e12, 10.0, -0.1), std::domain_error);
}

TEST(ArrayResponse, ZeroAngleIsAllOnes) {
  const CVec a = array_response(0.0, 4);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(a(i) - Complex(1, 0)), 0.0, 1e-15);
}

TEST(ArrayResponse, FirstEntryAlwaysOne) {
  for (double th : {-0.9, -0.3, 0.1, 0.77}) {
    EXPECT_EQ(array_response(th, 5)(0), Complex(1, 0));
  }
}

TEST(ArrayResponse, QuarterTurn) {
  const CVec a = array_response(0.5, 4);  // exp(j pi k / 2)
  EXPECT_NEAR(std::abs(a(0) - Complex(1, 0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(a(1) - Complex(0, 1)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(a(2) - Complex(-1, 0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(a(3) - Complex(0, -1)), 0.0, 1e-15);
}

TEST(ArrayResponse, UnitModulusEntries) {
  SplitMix64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const CVec a = array_response(gen.uniform(-1.0, 1.0), 16);
    for (int i = 0; i < a.size(); ++i) EXPECT_NEAR(std::abs(a(i)), 1.0, 1e-12);
  }
}

TEST(ArrayResponse, RejectsEmptyArray) {
  EXPECT_THROW(array_response(0.3, 0), std::domain_error);
}

namespace {

SystemConfig small_cfg(int k, int m, int n) {
  SystemConfig cfg;
  cfg.k_elements = k;
  cfg.m_antennas = m;
  cfg.n_users = n;
  cfg.n_reflective = n / 2;
  cfg.m_rf = std::max(n, 2);
  cfg.f_c_hz = 0.3e12;
  return cfg;
}

Geometry flat_geometry(int n) {
  Geometry geo;
  geo.d1 = 20.0;
  geo.phi_tx = 0.0;
  geo.phi_rx = 0.0;
  geo.d2.assign(n, 10.0);
  geo.phi.assign(n, 0.0);
  geo.group.assign(n, Group::reflective);
  for (int i = n / 2; i < n; ++i) geo.group[i] = Group::transmissive;
  return geo;
}

AbsorptionTable zero_absorption() {
  AbsorptionTable t;
  t.entries = {{0.05e12, 0.0}, {1.5e12, 0.0}};
  return t;
}

}  // namespace

TEST(Synthesize, FlatPhaseGivesConstantRankOneMatrix) {
  const auto cfg = small_cfg(3, 4, 2);
  const auto cs = synthesize_channels(cfg, flat_geometry(2), zero_absorption());
  const double q = path_gain(cfg.f_c_hz, 20.0, 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(std::abs(cs.G(i, j) - Complex(q, 0)), 0.0, 1e-18);
  Eigen::JacobiSVD<CMat> svd(cs.G);
  EXPECT_LE(svd.singularValues()(1), 1e-12 * svd.singularValues()(0));
}

TEST(Synthesize, OuterProductByHand) {
  // spatial frequencies 0.5 (IRS side) and 0 (BS side) on a 2x2 system
  auto cfg = small_cfg(2, 2, 1);
  Geometry geo = flat_geometry(1);
  geo.phi_rx = std::asin(0.5);
  const auto cs = synthesize_channels(cfg, geo, zero_absorption());
  const double q = path_gain(cfg.f_c_hz, geo.d1, 0.0);
  EXPECT_NEAR(std::abs(cs.G(0, 0) - q * Complex(1, 0)), 0.0, 1e-15 * q);
  EXPECT_NEAR(std::abs(cs.G(0, 1) - q * Complex(1, 0)), 0.0, 1e-15 * q);
  EXPECT_NEAR(std::abs(cs.G(1, 0) - q * Complex(0, 1)), 0.0, 1e-15 * q);
  EXPECT_NEAR(std::abs(cs.G(1, 1) - q * Complex(0, 1)), 0.0, 1e-15 * q);
}

TEST(Synthesize, FrobeniusNormMatchesGainForAnyAngles) {
  SplitMix64 gen(11);
  for (int trial = 0; trial < 10; ++trial) {
    auto cfg = small_cfg(5, 7, 3);
    Geometry geo = flat_geometry(3);
    geo.phi_tx = gen.uniform(-M_PI / 2, M_PI / 2);
    geo.phi_rx = gen.uniform(-M_PI / 2, M_PI / 2);
    for (auto& p : geo.phi) p = gen.uniform(-M_PI / 2, M_PI / 2);
    const auto cs = synthesize_channels(cfg, geo, AbsorptionTable::builtin());
    const double tau = absorption_coefficient(AbsorptionTable::builtin(), cfg.f_c_hz);
    const double q1 = path_gain(cfg.f_c_hz, geo.d1, tau);
    EXPECT_NEAR(cs.G.norm(), q1 * std::sqrt(5.0 * 7.0), 1e-10 * cs.G.norm());
    for (int n = 0; n < 3; ++n) {
      const double q2 = path_gain(cfg.f_c_hz, geo.d2[n], tau);
      EXPECT_NEAR(cs.h[n].norm(), q2 * std::sqrt(5.0), 1e-10 * cs.h[n].norm());
    }
  }
}

TEST(Synthesize, Deterministic) {
  auto cfg = small_cfg(4, 6, 2);
  Geometry geo = flat_geometry(2);
  geo.phi_rx = 0.4;
  geo.phi[1] = -0.7;
  const auto a = synthesize_channels(cfg, geo, AbsorptionTable::builtin());
  const auto b = synthesize_channels(cfg, geo, AbsorptionTable::builtin());
  EXPECT_TRUE(a.G == b.G);
  for (int n = 0; n < 2; ++n) EXPECT_TRUE(a.h[n] == b.h[n]);
}

TEST(Synthesize, RejectsDimensionMismatch) {
  auto cfg = small_cfg(4, 6, 3);
  EXPECT_THROW(synthesize_channels(cfg, flat_geometry(2), AbsorptionTable::builtin()),
               std::invalid_argument);
}

TEST(GeometryValidation, RejectsBadInputs) {
  Geometry geo = flat_geometry(2);
  geo.d1 = -1.0;
  EXPECT_THROW(geo.validate(), std::invalid_argument);
  geo = flat_geometry(2);
  geo.d2[0] = 0.0;
  EXPECT_THROW(geo.validate(), std::invalid_argument);
  geo = flat_geometry(2);
  geo.phi[1] = 2.0;
  EXPECT_THROW(geo.validate(), std::invalid_argument);
}
