#pragma once

// Scalar root finding for the monotone multiplier equations.
//
// Every equation solved here is strictly decreasing in its unknown on a
// half-line (lo, inf). Newton steps are taken while they stay inside the
// current sign bracket; otherwise the bracket is bisected.

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "rdp/errors.hpp"

namespace rdp {

struct RootResult {
  double x = 0.0;
  double fx = 0.0;
  int steps = 0;
  bool bisected = false;  // at least one bisection fallback step was taken
  bool capped = false;    // root lies beyond the search cap; x is the cap
};

struct RootOptions {
  double tol = 1e-12;      // |f(x)| target
  int max_newton = 50;     // Newton steps before switching to pure bisection
  int max_total = 400;     // hard cap on evaluations after bracketing
  double cap = 1e12;       // largest admissible root
};

// f returns (value, derivative). Non-finite values are treated as "far to
// the left of the root" (the functions here blow up towards lo).
using ValueAndSlope = std::function<std::pair<double, double>(double)>;

/// Root of a strictly decreasing f on (lo, cap]. `hi0` is the first upper
/// bracket candidate; it is doubled (relative to lo) until f changes sign.
/// `x0` is the Newton starting point, clamped into the bracket.
inline RootResult find_decreasing_root(const ValueAndSlope& f, double lo, double hi0, double x0,
                                       const RootOptions& opt = {}) {
  RootResult res;
  double a = lo;  // f(a) > 0 (or +inf / undefined at lo)
  double b = hi0;
  auto eval = [&](double x) {
    auto v = f(x);
    if (!std::isfinite(v.first)) v.first = std::numeric_limits<double>::infinity();
    return v;
  };

  auto fb = eval(b);
  double step = b - lo;
  while (fb.first > 0.0) {
    a = b;
    if (b >= opt.cap) {
      res.x = opt.cap;
      res.fx = fb.first;
      res.capped = true;
      return res;
    }
    step *= 2.0;
    b = std::min(lo + step, opt.cap);
    fb = eval(b);
    ++res.steps;
  }
  double x = (x0 > a && x0 < b) ? x0 : b;
  auto fx = x == b ? fb : eval(x);
  for (int it = 0; it < opt.max_total; ++it) {
    ++res.steps;
    if (std::abs(fx.first) <= opt.tol) {
      // One extra Newton step is nearly free and takes the root to rounding
      // level; outer fixed-point residuals below 1e-10 feel the difference.
      if (fx.second < 0.0 && std::isfinite(fx.second) && fx.first != 0.0) {
        double polished = x - fx.first / fx.second;
        if (polished > a && polished < b) {
          auto fp = eval(polished);
          if (std::abs(fp.first) < std::abs(fx.first)) {
            x = polished;
            fx = fp;
          }
        }
      }
      break;
    }
    if (fx.first > 0.0) a = x; else b = x;
    double next;
    bool newton_ok = false;
    if (it < opt.max_newton && std::isfinite(fx.first) && fx.second < 0.0 &&
        std::isfinite(fx.second)) {
      next = x - fx.first / fx.second;
      newton_ok = next > a && next < b;
    }
    if (!newton_ok) {
      next = 0.5 * (a + b);
      res.bisected = true;
    }
    if (next == x || b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(b))) {
      x = next;
      fx = eval(x);
      break;
    }
    x = next;
    fx = eval(x);
  }
  res.x = x;
  res.fx = fx.first;
  return res;
}

/// Multiplier of a constraint sum_k coef_k exp(logw_k - t * cost_k) <= budget.
///
/// Terms are supplied already grouped by distinct cost level (`cost` holds the
/// level, `logw` the log of the summed base weights at that level).
/// Returns 0 when the constraint holds at t = 0.
struct ExpSumConstraint {
  std::vector<double> cost;
  std::vector<double> logw;
  double budget = 0.0;

  double value(double t) const {
    double s = 0.0;
    for (std::size_t k = 0; k < cost.size(); ++k)
      if (cost[k] > 0.0) s += cost[k] * std::exp(logw[k] - t * cost[k]);
    return s - budget;
  }

  std::pair<double, double> value_and_slope(double t) const {
    double s = 0.0, ds = 0.0;
    for (std::size_t k = 0; k < cost.size(); ++k) {
      if (cost[k] <= 0.0) continue;
      double e = std::exp(logw[k] - t * cost[k]);
      s += cost[k] * e;
      ds -= cost[k] * cost[k] * e;
    }
    return {s - budget, ds};
  }
};

inline RootResult solve_multiplier(const ExpSumConstraint& g, double warm_start,
                                   const RootOptions& opt = {}) {
  double g0 = g.value(0.0);
  if (g0 <= 0.0) return RootResult{0.0, g0, 0, false, false};
  double hi = warm_start > 0.0 && std::isfinite(warm_start) ? 2.0 * warm_start : 1.0;
  return find_decreasing_root([&](double t) { return g.value_and_slope(t); }, 0.0, hi,
                              warm_start, opt);
}

/// Root of sum_j s_j / (eta - b_j) - 1 on (max_j b_j, inf).
inline RootResult solve_normalizer(std::span<const double> s, std::span<const double> b,
                                   double warm_start, const RootOptions& opt = {}) {
  if (s.size() != b.size() || s.empty()) throw DimensionMismatch("solve_normalizer: sizes differ");
  double lo = -std::numeric_limits<double>::infinity();
  double mass = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s[j] > 0.0) lo = std::max(lo, b[j]);
    mass += s[j];
  }
  if (!(mass > 0.0)) throw InvalidArgument("solve_normalizer: no positive mass");
  auto f = [&](double eta) -> std::pair<double, double> {
    double v = -1.0, dv = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s[j] == 0.0) continue;
      double gap = eta - b[j];
      if (!(gap > 0.0)) return {std::numeric_limits<double>::infinity(), 0.0};
      v += s[j] / gap;
      dv -= s[j] / (gap * gap);
    }
    return {v, dv};
  };
  // The root lies in (lo, lo + mass]: each term is at most s_j / (eta - lo).
  double scale = std::max(1.0, std::abs(lo));
  RootOptions o = opt;
  o.cap = lo + mass + scale;
  double hi = lo + mass * (1.0 + 1e-12) + 1e-300;
  if (!(hi > lo)) hi = std::nextafter(lo, std::numeric_limits<double>::infinity());
  return find_decreasing_root(f, lo, hi, warm_start, o);
}

}  // namespace rdp
