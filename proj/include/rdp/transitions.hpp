#pragma once

// Critical-transition geometry: the curve P = f(D) above which the perception
// budget no longer binds, the zero-rate upper bound D = h(P), transition
// detection on distortion-perception cross-sections, and n-letter scaling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdp/drp_solver.hpp"
#include "rdp/errors.hpp"
#include "rdp/prob.hpp"
#include "rdp/rdp_solver.hpp"
#include "rdp/transport.hpp"

namespace rdp {

struct SampleMeta {
  int iterations = 0;
  bool converged = true;
  double residual = 0.0;
  double rate = 0.0;
};

struct CurveSample {
  double abscissa = 0.0;
  double ordinate = 0.0;
  SampleMeta meta;
};

enum class TransitionMethod { secant_slope, rd_pushforward, zero_rate };

inline const char* to_string(TransitionMethod m) {
  switch (m) {
    case TransitionMethod::secant_slope: return "secant-slope";
    case TransitionMethod::rd_pushforward: return "rd-pushforward";
    case TransitionMethod::zero_rate: return "zero-rate";
  }
  return "unknown";
}

struct TransitionPoint {
  double D = 0.0;
  double P = 0.0;
  double rate = 0.0;
  TransitionMethod method = TransitionMethod::secant_slope;
  SampleMeta meta;
};

/// Evenly spaced grid of `count` points on [start, stop].
inline std::vector<double> linspace(double start, double stop, std::size_t count) {
  if (count == 0) throw InvalidArgument("grid needs at least one point");
  std::vector<double> g(count);
  for (std::size_t k = 0; k < count; ++k)
    g[k] = count == 1 ? start : start + (stop - start) * static_cast<double>(k) / static_cast<double>(count - 1);
  return g;
}

/// Perception level of the unconstrained-perception optimum at each D:
/// samples of f(D). The perception budget is set to 10 max(c) and the solve
/// must end with a zero perception multiplier, otherwise InvalidArgument.
/// For KL the budget is 10 ln(N) + 10 and `c` only fixes the shape.
inline std::vector<TransitionPoint> transition_curve_via_rd(const Distribution& p, const CostMatrix& d,
                                                           const CostMatrix& c, std::span<const double> D_grid,
                                                           Perception measure = Perception::wasserstein,
                                                           const SolverConfig& cfg = {}, double epsilon = 0.01) {
  std::vector<TransitionPoint> out;
  out.reserve(D_grid.size());
  const double big = measure == Perception::kl ? 10.0 * std::log(static_cast<double>(c.cols())) + 10.0
                                                : 10.0 * std::max(c.max_entry(), 1.0);
  for (double D : D_grid) {
    RdpProblem prob{p, d, c, D, big, epsilon};
    SolverResult res = solve_rdp(prob, measure, cfg);
    if (res.state.gamma != 0.0) throw InvalidArgument("perception budget did not become inactive");
    TransitionPoint tp;
    tp.D = D;
    tp.P = res.achieved_perception;
    tp.rate = res.rate;
    tp.method = TransitionMethod::rd_pushforward;
    tp.meta = {res.iterations, res.converged, res.final_residual(), res.rate};
    out.push_back(tp);
  }
  return out;
}

/// First sample whose secant slope to its successor is below `slope_tol` in
/// absolute value.
inline TransitionPoint detect_transition_point(std::span<const CurveSample> samples, double slope_tol = 1e-3) {
  if (samples.size() < 3) throw InvalidArgument("transition detection needs at least 3 samples");
  if (!(slope_tol > 0.0)) throw InvalidArgument("slope_tol must be positive");
  for (std::size_t k = 0; k + 1 < samples.size(); ++k)
    if (!(samples[k + 1].abscissa > samples[k].abscissa))
      throw InvalidArgument("samples must be strictly increasing in abscissa");
  for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
    double slope = (samples[k + 1].ordinate - samples[k].ordinate) / (samples[k + 1].abscissa - samples[k].abscissa);
    if (std::abs(slope) < slope_tol) {
      TransitionPoint tp;
      tp.P = samples[k].abscissa;
      tp.D = samples[k].ordinate;
      tp.rate = samples[k].meta.rate;
      tp.method = TransitionMethod::secant_slope;
      tp.meta = samples[k].meta;
      return tp;
    }
  }
  throw NoTransitionFound("no secant slope fell below the tolerance");
}

/// Distortion-perception cross-section at a fixed rate: (P, D(R, P)) samples.
inline std::vector<CurveSample> drp_cross_section(const Distribution& p, const CostMatrix& d, const CostMatrix& c,
                                                  double R, std::span<const double> P_grid,
                                                  const SolverConfig& cfg = {}, double epsilon = 0.01) {
  std::vector<CurveSample> out;
  out.reserve(P_grid.size());
  for (double P : P_grid) {
    SolverResult res = solve_drp(DrpProblem{p, d, c, R, P, epsilon}, cfg);
    out.push_back({P, res.achieved_distortion, {res.iterations, res.converged, res.final_residual(), res.rate}});
  }
  return out;
}

/// Zero-rate distortion D(0, P) = h(P) on a grid of perception budgets.
inline std::vector<TransitionPoint> upper_bound_h(const Distribution& p, const CostMatrix& d, const CostMatrix& c,
                                                  std::span<const double> P_grid) {
  std::vector<TransitionPoint> out;
  out.reserve(P_grid.size());
  for (double P : P_grid) {
    ZeroRateSolution z = solve_zero_rate(p, d, c, P);
    TransitionPoint tp;
    tp.D = z.distortion;
    tp.P = P;
    tp.rate = 0.0;
    tp.method = TransitionMethod::zero_rate;
    out.push_back(tp);
  }
  return out;
}

struct EndpointReport {
  double d_inf = 0.0;           // min_j sum_i p_i d_ij
  double p_at_endpoint = 0.0;   // W_d(p, one-hot at the minimizing j)
  double difference = 0.0;
  std::size_t argmin = 0;
  bool f_below_diagonal = true; // f(D) <= D + tol on the checked grid
  double max_excess = 0.0;      // max over the grid of f(D) - D
  std::vector<TransitionPoint> curve;
};

/// Endpoint of the transition curve when perception and distortion share one
/// cost matrix, plus a check of f(D) <= D on `grid_points` points of [0, D_inf].
inline EndpointReport endpoint_identity_check(const Distribution& p, const CostMatrix& d,
                                              std::size_t grid_points = 20, const SolverConfig& cfg = {},
                                              double epsilon = 0.01, double tol = 1e-6) {
  const std::size_t m = p.size(), n = d.cols();
  EndpointReport rep;
  rep.d_inf = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += p[i] * d(i, j);
    if (s < rep.d_inf) {
      rep.d_inf = s;
      rep.argmin = j;
    }
  }
  std::vector<double> one_hot(n, 0.0);
  one_hot[rep.argmin] = 1.0;
  rep.p_at_endpoint = solve_transport(p.probs(), one_hot, d).value;
  rep.difference = std::abs(rep.d_inf - rep.p_at_endpoint);
  if (grid_points > 0) {
    auto grid = linspace(0.0, rep.d_inf, grid_points);
    rep.curve = transition_curve_via_rd(p, d, d, grid, Perception::wasserstein, cfg, epsilon);
    for (const auto& tp : rep.curve) {
      rep.max_excess = std::max(rep.max_excess, tp.P - tp.D);
      if (tp.P > tp.D + tol) rep.f_below_diagonal = false;
    }
  }
  return rep;
}

/// Rate of the n-letter problem: the perception budget of a tensorizing
/// divergence scales as P / n.
inline double n_letter_rate(int n, const RdpProblem& prob, Perception measure = Perception::wasserstein,
                            const SolverConfig& cfg = {}) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  RdpProblem scaled = prob;
  scaled.P = prob.P / static_cast<double>(n);
  return solve_rdp(scaled, measure, cfg).rate;
}

}  // namespace rdp
