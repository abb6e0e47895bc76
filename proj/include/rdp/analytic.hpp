#pragma once

// Closed-form rate-distortion-perception values and transition curves for a
// Bernoulli source (Hamming distortion, TV perception) and a Gaussian source
// (squared error, squared Wasserstein-2 perception), plus the Gaussian
// discretization used to feed the numeric solvers. Natural logs throughout.

#include <cmath>
#include <numbers>
#include <vector>

#include "rdp/errors.hpp"
#include "rdp/prob.hpp"

namespace rdp {

inline double binary_entropy(double a) { return -xlogx(a) - xlogx(1.0 - a); }

inline double ternary_entropy(double a, double b) { return -xlogx(a) - xlogx(b) - xlogx(1.0 - a - b); }

inline double binary_rdp_closed_form(double p, double D, double P) {
  if (!(p > 0.0 && p <= 0.5)) throw DomainError("binary source parameter must lie in (0, 1/2]");
  if (!(D >= 0.0) || !(P >= 0.0)) throw DomainError("budgets must be non-negative");
  const double q = 1.0 - p;
  if (P > p) return D < p ? binary_entropy(p) - binary_entropy(D) : 0.0;
  const double s1_end = P / (1.0 - 2.0 * (p - P));
  const double s2_end = 2.0 * p * q - (q - p) * P;
  if (D < s1_end) return binary_entropy(p) - binary_entropy(D);
  if (D < s2_end)
    return 2.0 * binary_entropy(p) + binary_entropy(p - P) - ternary_entropy((D - P) / 2.0, p) -
           ternary_entropy((D + P) / 2.0, q);
  return 0.0;
}

inline double gaussian_rdp_closed_form(double sigma, double D, double P) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  if (!(D >= 0.0) || !(P >= 0.0)) throw DomainError("budgets must be non-negative");
  const double s2 = sigma * sigma;
  const double switch_point = sigma - std::sqrt(std::abs(s2 - D));
  if (std::sqrt(P) < switch_point) {
    const double a = sigma - std::sqrt(P);
    const double num = s2 * a * a;
    const double half = (s2 + a * a - D) / 2.0;
    const double den = num - half * half;
    if (!(den > 0.0) || !(num > 0.0)) throw DomainError("closed form undefined at this (D, P)");
    return 0.5 * std::log(num / den);
  }
  if (!(D > 0.0)) throw DomainError("closed form needs D > 0");
  return std::max(0.5 * std::log(s2 / D), 0.0);
}

inline double binary_transition_f(double p, double D) {
  if (!(p > 0.0 && p <= 0.5)) throw DomainError("binary source parameter must lie in (0, 1/2]");
  if (!(D >= 0.0 && D <= p)) throw DomainError("transition curve is defined for D in [0, p]");
  if (p == 0.5) return 0.0;
  return D * (1.0 - 2.0 * p) / (1.0 - 2.0 * D);
}

inline double binary_upper_h(double p, double P) {
  if (!(p > 0.0 && p <= 0.5)) throw DomainError("binary source parameter must lie in (0, 1/2]");
  if (!(P >= 0.0)) throw DomainError("P must be non-negative");
  return P < p ? 2.0 * p * (1.0 - p) - (1.0 - 2.0 * p) * P : p;
}

inline double gaussian_transition_f(double sigma, double D) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  const double s2 = sigma * sigma;
  if (!(D >= 0.0 && D <= s2)) throw DomainError("transition curve is defined for D in [0, sigma^2]");
  const double a = sigma - std::sqrt(std::abs(s2 - D));
  return a * a;
}

inline double gaussian_upper_h(double sigma, double P) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  if (!(P >= 0.0)) throw DomainError("P must be non-negative");
  const double s2 = sigma * sigma;
  if (P >= s2) return s2;
  const double a = sigma - std::sqrt(P);
  return s2 + a * a;
}

struct GaussianSpec {
  double mu = 0.0;
  double sigma = 2.0;
  double S = 8.0;      // half-width of the truncation interval
  double delta = 0.5;  // grid spacing

  std::size_t grid_size() const {
    double count = 2.0 * S / delta;
    return static_cast<std::size_t>(std::llround(count)) + 1;
  }

  void validate() const {
    if (!std::isfinite(mu)) throw DomainError("mu must be finite");
    if (!(sigma > 0.0) || !(S > 0.0) || !(delta > 0.0)) throw DomainError("sigma, S, delta must be positive");
    if (!(delta < S)) throw DomainError("delta must be smaller than S");
    double count = 2.0 * S / delta;
    if (std::abs(count - std::round(count)) > 1e-9 * std::max(1.0, count))
      throw DomainError("2S/delta must be an integer");
  }
};

inline double normal_cdf(double x, double mu, double sigma) {
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::numbers::sqrt2));
}

/// Bin masses of N(mu, sigma^2) on the grid mu - S + k delta; the tail mass
/// beyond the outer bin edges is removed by renormalization.
inline Distribution discretize_gaussian(const GaussianSpec& spec) {
  spec.validate();
  const std::size_t n = spec.grid_size();
  std::vector<double> x(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = spec.mu - spec.S + static_cast<double>(i) * spec.delta;
    // Difference of upper tails on the right half and of lower tails on the
    // left keeps both ends free of cancellation and the masses symmetric.
    double lo = x[i] - spec.delta / 2.0, hi = x[i] + spec.delta / 2.0;
    if (x[i] >= spec.mu)
      w[i] = normal_cdf(-(lo - spec.mu), 0.0, spec.sigma) - normal_cdf(-(hi - spec.mu), 0.0, spec.sigma);
    else
      w[i] = normal_cdf(hi, spec.mu, spec.sigma) - normal_cdf(lo, spec.mu, spec.sigma);
  }
  // Mirror-image bins must carry identical mass; summing the halves in
  // matching order keeps that exact after renormalization.
  for (std::size_t i = 0; i < n / 2; ++i) {
    double mirrored = x[n - 1 - i] - spec.mu;
    if (std::abs(mirrored + (x[i] - spec.mu)) < 1e-12 * spec.S) w[n - 1 - i] = w[i];
  }
  return Distribution::normalized(std::move(w), SupportGrid(std::move(x)));
}

}  // namespace rdp
