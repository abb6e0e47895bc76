#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rdp/analytic.hpp"

using namespace rdp;

namespace {

// Ternary entropy written out independently of the library.
double ht(double a, double b) {
  double c = 1.0 - a - b;
  auto t = [](double x) { return x > 0.0 ? -x * std::log(x) : 0.0; };
  return t(a) + t(b) + t(c);
}

}  // namespace

TEST(BinaryClosedForm, Examples) {
  EXPECT_NEAR(binary_rdp_closed_form(0.1, 0.05, 1.0), 0.126568, 1e-6);
  EXPECT_EQ(binary_rdp_closed_form(0.1, 0.15, 0.06), 0.0);
  // For P = 0.06 the middle piece is [0.0652, 0.132); D = 0.02 lies in the first.
  double p = 0.1, q = 0.9, P = 0.06;
  EXPECT_NEAR(binary_rdp_closed_form(p, 0.02, P), oracle::hb(p) - oracle::hb(0.02), 1e-12);
  double D = 0.08;
  double ref = 2 * oracle::hb(p) + oracle::hb(p - P) - ht((D - P) / 2, p) - ht((D + P) / 2, q);
  EXPECT_NEAR(binary_rdp_closed_form(p, D, P), ref, 1e-12);
  EXPECT_THROW(binary_rdp_closed_form(0.6, 0.1, 0.1), DomainError);
  EXPECT_THROW(binary_rdp_closed_form(0.0, 0.1, 0.1), DomainError);
}

TEST(BinaryClosedForm, ContinuousAcrossPieceBoundaries) {
  const double p = 0.1, q = 0.9;
  for (double P : {0.01, 0.02, 0.05, 0.08}) {
    double s1 = P / (1 - 2 * (p - P)), s2 = 2 * p * q - (q - p) * P;
    for (double b : {s1, s2}) {
      double lo = binary_rdp_closed_form(p, b * (1 - 1e-12), P);
      double hi = binary_rdp_closed_form(p, b * (1 + 1e-12), P);
      EXPECT_NEAR(lo, hi, 1e-9) << "P=" << P << " boundary " << b;
    }
  }
}

TEST(BinaryClosedForm, LargePerceptionIsRateDistortion) {
  for (double D = 0.0; D < 0.2; D += 0.01) {
    double rd = D < 0.1 ? oracle::hb(0.1) - oracle::hb(D) : 0.0;
    EXPECT_NEAR(binary_rdp_closed_form(0.1, D, 0.1 + 1e-9), rd, 1e-12);
    EXPECT_NEAR(binary_rdp_closed_form(0.1, D, 5.0), rd, 1e-12);
  }
}

TEST(GaussianClosedForm, Examples) {
  EXPECT_NEAR(gaussian_rdp_closed_form(2.0, 1.0, 4.0), std::log(2.0), 1e-12);
  EXPECT_NEAR(gaussian_rdp_closed_form(2.0, 4.0, 4.0), 0.0, 1e-15);
  // At D = 1 the first branch needs sqrt(P) < 2 - sqrt(3); P = 0.25 is past it.
  EXPECT_NEAR(gaussian_rdp_closed_form(2.0, 1.0, 0.25), std::log(2.0), 1e-12);
  double s = 2.0, D = 1.0, P = 0.04, a = s - std::sqrt(P);
  double num = s * s * a * a, half = (s * s + a * a - D) / 2.0;
  EXPECT_NEAR(gaussian_rdp_closed_form(s, D, P), 0.5 * std::log(num / (num - half * half)), 1e-12);
  EXPECT_GT(gaussian_rdp_closed_form(s, D, P), std::log(2.0));
}

TEST(GaussianClosedForm, BranchesAgreeOnSwitchingSurface) {
  const double s = 2.0;
  for (double D : {0.5, 1.0, 2.0, 3.0, 3.5}) {
    double root = s - std::sqrt(std::abs(s * s - D));
    double P = root * root;
    double below = gaussian_rdp_closed_form(s, D, P * (1 - 1e-12));
    double above = gaussian_rdp_closed_form(s, D, P * (1 + 1e-12));
    EXPECT_NEAR(below, above, 1e-9) << "D=" << D;
  }
}

TEST(TransitionCurves, BinaryExamples) {
  EXPECT_EQ(binary_transition_f(0.1, 0.0), 0.0);
  EXPECT_NEAR(binary_transition_f(0.1, 0.05), 0.05 * 0.8 / 0.9, 1e-15);
  EXPECT_NEAR(binary_upper_h(0.1, 0.0), 0.18, 1e-15);
  EXPECT_NEAR(binary_upper_h(0.1, 0.1), 0.1, 1e-15);
  EXPECT_NEAR(binary_upper_h(0.1, 0.5), 0.1, 1e-15);
}

TEST(TransitionCurves, GaussianExamples) {
  EXPECT_EQ(gaussian_transition_f(2.0, 0.0), 0.0);
  EXPECT_NEAR(gaussian_transition_f(2.0, 4.0), 4.0, 1e-15);
  EXPECT_NEAR(gaussian_transition_f(2.0, 3.0), 1.0, 1e-15);
  EXPECT_NEAR(gaussian_upper_h(2.0, 1.0), 5.0, 1e-15);
  EXPECT_NEAR(gaussian_upper_h(2.0, 4.0), 4.0, 1e-15);
}

TEST(DiscretizeGaussian, DefaultGrid) {
  auto p = discretize_gaussian(GaussianSpec{});
  ASSERT_EQ(p.size(), 33u);
  EXPECT_DOUBLE_EQ(p.support()[0], -8.0);
  EXPECT_DOUBLE_EQ(p.support()[32], 8.0);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(p[i], p[p.size() - 1 - i], 1e-14);
    total += p[i];
  }
  EXPECT_NEAR(total, 1.0, 1e-15);
}

TEST(DiscretizeGaussian, CentralBinMatchesErf) {
  auto p = discretize_gaussian(GaussianSpec{0.0, 2.0, 8.0, 0.5});
  // Mass in (-0.25, 0.25) from erf, renormalized by the mass on (-8.25, 8.25).
  double central = std::erf(0.25 / (2.0 * std::sqrt(2.0)));
  double total = std::erf(8.25 / (2.0 * std::sqrt(2.0)));
  EXPECT_NEAR(p[16], central / total, 1e-14);
}

TEST(DiscretizeGaussian, InvalidSpec) {
  EXPECT_THROW(discretize_gaussian(GaussianSpec{0.0, -1.0, 8.0, 0.5}), DomainError);
  EXPECT_THROW(discretize_gaussian(GaussianSpec{0.0, 2.0, 8.0, 0.3}), DomainError);
  EXPECT_THROW(discretize_gaussian(GaussianSpec{0.0, 2.0, 1.0, 2.0}), DomainError);
}
