#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rdp/transitions.hpp"

using namespace rdp;

namespace {

const Distribution kP = Distribution::bernoulli(0.1);

std::vector<CurveSample> samples_of(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<CurveSample> s;
  for (std::size_t k = 0; k < x.size(); ++k) s.push_back({x[k], y[k], {}});
  return s;
}

}  // namespace

TEST(Linspace, EndpointsAndCount) {
  auto g = linspace(0.0, 1.0, 5);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_DOUBLE_EQ(g[2], 0.5);
  EXPECT_THROW(linspace(0.0, 1.0, 0), InvalidArgument);
}

TEST(TransitionCurveViaRd, BinaryMatchesPushforwardPerception) {
  // Rate-distortion optimum for Bernoulli(0.1) under Hamming: r_1 = (p - D)/(1 - 2D),
  // so the TV distance to p is p - r_1.
  std::vector<double> grid{0.01, 0.03, 0.05, 0.08};
  SolverConfig cfg;
  cfg.max_iter = 20000;
  auto curve = transition_curve_via_rd(kP, hamming_matrix(2, 2), hamming_matrix(2, 2), grid, Perception::wasserstein,
                                       cfg, 1e-3);
  ASSERT_EQ(curve.size(), grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double D = grid[k];
    double ref = 0.1 - (0.1 - D) / (1.0 - 2.0 * D);
    EXPECT_NEAR(curve[k].P, ref, 1e-3) << "D=" << D;
    EXPECT_NEAR(curve[k].rate, oracle::hb(0.1) - oracle::hb(D), 1e-4);
    EXPECT_EQ(curve[k].method, TransitionMethod::rd_pushforward);
  }
}

TEST(UpperBoundH, BinaryLinearBranch) {
  std::vector<double> grid{0.0, 0.025, 0.05, 0.1, 0.3};
  auto h = upper_bound_h(kP, hamming_matrix(2, 2), hamming_matrix(2, 2), grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double P = std::min(grid[k], 0.1);
    EXPECT_NEAR(h[k].D, 0.1 * (0.9 + P) + 0.9 * (0.1 - P), 1e-12);
    EXPECT_EQ(h[k].method, TransitionMethod::zero_rate);
  }
}

TEST(DetectTransitionPoint, FlatCurveReturnsFirstSample) {
  auto s = samples_of({0.0, 0.1, 0.2, 0.3}, {0.5, 0.5, 0.5, 0.5});
  auto tp = detect_transition_point(s);
  EXPECT_EQ(tp.P, 0.0);
  EXPECT_EQ(tp.D, 0.5);
  EXPECT_EQ(tp.method, TransitionMethod::secant_slope);
}

TEST(DetectTransitionPoint, KneeIsLocated) {
  auto s = samples_of({0.0, 0.1, 0.2, 0.3, 0.4}, {1.0, 0.8, 0.6, 0.6, 0.6});
  EXPECT_DOUBLE_EQ(detect_transition_point(s).P, 0.2);
}

TEST(DetectTransitionPoint, SteepCurveThrows) {
  auto s = samples_of({0.0, 0.1, 0.2}, {1.0, 0.5, 0.0});
  EXPECT_THROW(detect_transition_point(s), NoTransitionFound);
}

TEST(DetectTransitionPoint, InvalidInput) {
  EXPECT_THROW(detect_transition_point(samples_of({0.0, 0.1}, {1.0, 1.0})), InvalidArgument);
  EXPECT_THROW(detect_transition_point(samples_of({0.0, 0.0, 0.1}, {1.0, 1.0, 1.0})), InvalidArgument);
  EXPECT_THROW(detect_transition_point(samples_of({0.0, 0.1, 0.2}, {1.0, 1.0, 1.0}), 0.0), InvalidArgument);
}

TEST(DrpCrossSection, ZeroRateFlattensAtMajorityMass) {
  auto grid = linspace(0.0, 0.2, 11);
  auto s = drp_cross_section(kP, hamming_matrix(2, 2), hamming_matrix(2, 2), 0.0, grid);
  auto tp = detect_transition_point(s);
  EXPECT_NEAR(tp.P, 0.1, 1e-12);
  EXPECT_NEAR(tp.D, 0.1, 1e-12);
}

TEST(EndpointIdentityCheck, Binary) {
  SolverConfig cfg;
  cfg.max_iter = 20000;
  auto rep = endpoint_identity_check(kP, hamming_matrix(2, 2), 6, cfg, 1e-3, 1e-3);
  EXPECT_EQ(rep.argmin, 0u);
  EXPECT_NEAR(rep.d_inf, 0.1, 1e-15);
  EXPECT_NEAR(rep.p_at_endpoint, 0.1, 1e-15);
  EXPECT_LE(rep.difference, 1e-12);
  EXPECT_TRUE(rep.f_below_diagonal);
  EXPECT_EQ(rep.curve.size(), 6u);
}

TEST(NLetterRate, OneLetterIsSingleLetterAndRateGrowsWithN) {
  RdpProblem prob{kP, hamming_matrix(2, 2), hamming_matrix(2, 2), 0.04, 0.04};
  double r1 = n_letter_rate(1, prob);
  EXPECT_NEAR(r1, solve_rdp_wasserstein(prob).rate, 1e-12);
  double r2 = n_letter_rate(2, prob), r4 = n_letter_rate(4, prob);
  EXPECT_GE(r2, r1 - 1e-9);
  EXPECT_GE(r4, r2 - 1e-9);
  EXPECT_THROW(n_letter_rate(0, prob), InvalidArgument);
}
