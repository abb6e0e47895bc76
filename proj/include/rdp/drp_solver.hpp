#pragma once

// Distortion-rate-perception: minimum expected distortion under a rate budget
// R (nats) and a transport perception budget P.
//
// R > 0 runs the alternating scaling scheme with the channel kernel
// exp(-mu d), where mu = 1 / (rate multiplier) is fixed each sweep by the
// rate equation. R = 0 is solved exactly as a linear program over r, and
// R >= H(p) on a common alphabet returns the identity channel.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "rdp/errors.hpp"
#include "rdp/prob.hpp"
#include "rdp/rdp_solver.hpp"
#include "rdp/transport.hpp"

namespace rdp {

struct DrpProblem {
  Distribution p;
  CostMatrix d;
  CostMatrix c;
  double R = 0.0;
  double P = 0.0;
  double epsilon = 0.01;

  void validate() const {
    if (!std::isfinite(R) || R < 0.0) throw DomainError("rate budget must be finite and >= 0");
    if (!std::isfinite(P) || P < 0.0) throw DomainError("perception budget must be finite and >= 0");
    if (!std::isfinite(epsilon) || !(epsilon > 0.0)) throw DomainError("epsilon must be finite and > 0");
    if (d.rows() != p.size()) throw DimensionMismatch("distortion matrix rows != source size");
    if (c.rows() != d.rows() || c.cols() != d.cols())
      throw DimensionMismatch("perception cost and distortion matrices differ in shape");
  }
};

/// Zero-rate optimum: min_r sum_j r_j sum_i p_i d_ij subject to W_c(p, r) <= P.
struct ZeroRateSolution {
  double distortion = 0.0;
  double multiplier = 0.0;  // optimal dual variable of the perception budget
  Distribution r;
  Coupling plan;  // transport plan from p to r certifying the budget
};

namespace detail {

// Lower envelope of the lines d_bar_j + t c_ij (one row) on t >= 0: indices
// of the minimizing j on each interval and the interval start points.
struct Envelope {
  std::vector<double> starts;
  std::vector<std::size_t> index;
};

inline Envelope lower_envelope(std::span<const double> dbar, std::span<const double> crow) {
  const std::size_t n = dbar.size();
  auto better_at_zero = [&](std::size_t a, std::size_t b) {
    if (dbar[a] != dbar[b]) return dbar[a] < dbar[b];
    if (crow[a] != crow[b]) return crow[a] < crow[b];
    return a < b;
  };
  std::size_t cur = 0;
  for (std::size_t j = 1; j < n; ++j)
    if (better_at_zero(j, cur)) cur = j;
  Envelope env{{0.0}, {cur}};
  double t = 0.0;
  while (true) {
    std::size_t next = n;
    double tnext = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      if (!(crow[k] < crow[cur])) continue;
      double tk = std::max(t, (dbar[k] - dbar[cur]) / (crow[cur] - crow[k]));
      if (tk < tnext || (tk == tnext && crow[k] < crow[next])) {
        tnext = tk;
        next = k;
      }
    }
    if (next == n) break;
    t = tnext;
    cur = next;
    if (env.starts.back() == t) {
      env.index.back() = cur;
    } else {
      env.starts.push_back(t);
      env.index.push_back(cur);
    }
  }
  return env;
}

inline std::size_t envelope_at(const Envelope& env, double t) {
  auto it = std::upper_bound(env.starts.begin(), env.starts.end(), t);
  return env.index[static_cast<std::size_t>(it - env.starts.begin()) - 1];
}

}  // namespace detail

/// Exact zero-rate solution. The dual g(t) = sum_i p_i min_j (d_bar_j + t c_ij) - t P
/// is concave and piecewise linear; its maximizer is a breakpoint where the
/// slope changes sign, and the primal plan mixes the two adjacent selections.
inline ZeroRateSolution solve_zero_rate(const Distribution& p, const CostMatrix& d,
                                        const CostMatrix& c, double P) {
  const std::size_t m = p.size(), n = d.cols();
  if (d.rows() != m || c.rows() != m || c.cols() != n)
    throw DimensionMismatch("solve_zero_rate: shapes disagree");
  if (!(P >= 0.0)) throw DomainError("perception budget must be >= 0");
  std::vector<double> dbar(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) dbar[j] += p[i] * d(i, j);

  std::vector<detail::Envelope> env(m);
  std::vector<double> bps;
  for (std::size_t i = 0; i < m; ++i) {
    if (p[i] == 0.0) continue;
    env[i] = detail::lower_envelope(dbar, c.matrix().row(i));
    bps.insert(bps.end(), env[i].starts.begin() + 1, env[i].starts.end());
  }
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end()), bps.end());

  // Selection on the open interval just right of `t` and its transport cost.
  auto select = [&](double t, std::vector<std::size_t>& sel) {
    double cost = 0.0;
    sel.assign(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
      if (p[i] == 0.0) continue;
      sel[i] = detail::envelope_at(env[i], t);
      cost += p[i] * c(i, sel[i]);
    }
    return cost;
  };

  std::vector<std::size_t> right, left;
  double cost_right = select(0.0, right);
  double t_star = 0.0, cost_left = cost_right;
  left = right;
  if (cost_right > P) {
    // First breakpoint whose right selection meets the budget.
    std::size_t lo = 0, hi = bps.size();
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      std::vector<std::size_t> tmp;
      if (select(bps[mid], tmp) <= P) hi = mid;
      else lo = mid + 1;
    }
    if (lo == bps.size()) throw Infeasible("perception budget below the least achievable transport cost");
    t_star = bps[lo];
    cost_right = select(t_star, right);
    cost_left = lo == 0 ? select(0.0, left) : select(bps[lo - 1], left);
  }
  const double theta = cost_left > cost_right ? (P - cost_right) / (cost_left - cost_right) : 0.0;
  const double wl = std::clamp(theta, 0.0, 1.0);

  Matrix plan(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    if (p[i] == 0.0) continue;
    plan(i, left[i]) += wl * p[i];
    plan(i, right[i]) += (1.0 - wl) * p[i];
  }
  Coupling pi(std::move(plan));
  auto rv = pi.right_marginal();
  ZeroRateSolution sol;
  sol.multiplier = t_star;
  for (std::size_t j = 0; j < n; ++j) sol.distortion += rv[j] * dbar[j];
  sol.r = Distribution::normalized(std::move(rv));
  sol.plan = std::move(pi);
  return sol;
}

namespace detail {

inline SolverResult product_result(const DrpProblem& prob, const ZeroRateSolution& z) {
  SolverResult res;
  res.r = z.r;
  res.w = Channel::constant_rows(z.r, prob.p.size());
  res.pi = z.plan;
  res.rate = 0.0;
  res.achieved_distortion = expected_distortion(res.w, prob.p, prob.d);
  res.plan_cost = z.plan.cost(prob.c);
  res.achieved_perception = wasserstein(prob.p, res.r, prob.c);
  res.converged = true;
  return res;
}

}  // namespace detail

/// Minimum expected distortion under rate and perception budgets. The
/// returned `rate` is the achieved mutual information and
/// `achieved_distortion` the objective value. In the iterate, `lambda` holds
/// the channel kernel exponent (the reciprocal of the rate multiplier) and
/// `gamma` the perception multiplier.
inline SolverResult solve_drp(const DrpProblem& prob, const SolverConfig& cfg = {}) {
  prob.validate();
  cfg.validate();
  const std::size_t m = prob.p.size(), n = prob.d.cols();
  if (prob.R == 0.0) return detail::product_result(prob, solve_zero_rate(prob.p, prob.d, prob.c, prob.P));
  if (m == n && prob.R >= entropy(prob.p) && prob.d.zero_iff_diagonal()) {
    SolverResult res;
    res.w = Channel::identity(n);
    res.r = prob.p;
    Matrix pi(m, n);
    for (std::size_t i = 0; i < m; ++i) pi(i, i) = prob.p[i];
    res.pi = Coupling(std::move(pi));
    res.rate = mutual_information(res.w, prob.p);
    res.achieved_distortion = 0.0;
    res.achieved_perception = 0.0;
    res.converged = true;
    return res;
  }
  RdpProblem inner{prob.p, prob.d, prob.c, 0.0, prob.P, prob.epsilon};
  SolverResult res = detail::solve_on_support(inner, cfg, false, prob.R);
  res.rate = mutual_information(res.w, prob.p);
  return res;
}

}  // namespace rdp
