#pragma once

// Rate-distortion-perception solver: alternating entropic scaling on the
// channel block (w), the perception-coupling block (pi) and the shared
// reconstruction marginal r.
//
// All scaling vectors are carried as logarithms; the kernels exp(-lambda d)
// and exp(-gamma c / eps) are never formed explicitly.

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <optional>
#include <utility>
#include <vector>

#include "rdp/errors.hpp"
#include "rdp/prob.hpp"
#include "rdp/root_find.hpp"
#include "rdp/scaling.hpp"
#include "rdp/transport.hpp"

namespace rdp {

struct RdpProblem {
  Distribution p;
  CostMatrix d;
  std::optional<CostMatrix> c;  // perception transport cost; absent for the KL measure
  double D = 0.0;
  double P = 0.0;
  double epsilon = 0.01;

  std::size_t m() const { return p.size(); }
  std::size_t n() const { return d.cols(); }

  void validate(bool need_cost) const {
    if (!std::isfinite(D) || D < 0.0) throw DomainError("distortion budget must be finite and >= 0");
    if (!std::isfinite(P) || P < 0.0) throw DomainError("perception budget must be finite and >= 0");
    if (!std::isfinite(epsilon) || !(epsilon > 0.0)) throw DomainError("epsilon must be finite and > 0");
    if (d.rows() != p.size()) throw DimensionMismatch("distortion matrix rows != source size");
    if (need_cost) {
      if (!c) throw InvalidArgument("perception cost matrix is required");
      if (c->rows() != d.rows() || c->cols() != d.cols())
        throw DimensionMismatch("perception cost and distortion matrices differ in shape");
    }
  }
};

struct SolverConfig {
  int max_iter = 1000;
  double residual_tol = 1e-10;
  double newton_tol = 1e-12;
  int newton_max_steps = 50;
  // Passes over the perception-coupling block (scalings and its multiplier)
  // per outer iteration. 1 gives the plain alternation.
  int plan_sweeps = 10;
  // Log-space over-relaxation of the r update: log r <- (1-w) log r + w log r_new.
  // 1 gives the plain update; values above ~2 destabilize the iteration.
  double relaxation = 1.8;

  void validate() const {
    if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
    if (!(residual_tol > 0.0) || !(newton_tol > 0.0)) throw InvalidArgument("tolerances must be > 0");
    if (newton_max_steps < 1) throw InvalidArgument("newton_max_steps must be >= 1");
    if (plan_sweeps < 1) throw InvalidArgument("plan_sweeps must be >= 1");
    if (!(relaxation > 0.0 && relaxation < 2.0)) throw InvalidArgument("relaxation must lie in (0, 2)");
  }

  RootOptions root_options() const {
    RootOptions o;
    o.tol = newton_tol;
    o.max_newton = newton_max_steps;
    return o;
  }
};

struct ResidualReport {
  double r_psi = 0.0, r_phi = 0.0, r_lambda = 0.0, r_eta = 0.0;
  double r_varphi = 0.0, r_xi = 0.0, r_gamma = 0.0;
  double overall = 0.0;

  void finalize() {
    double s = r_psi * r_psi + r_phi * r_phi + r_lambda * r_lambda + r_eta * r_eta +
               r_varphi * r_varphi + r_xi * r_xi + r_gamma * r_gamma;
    overall = std::sqrt(s / 7.0);
  }
};

/// Iterate of the alternating scheme. Scalings are stored as natural logs:
/// phi_i = exp(log_phi[i]) and so on.
struct DualState {
  std::vector<double> log_phi, log_psi, log_xi, log_varphi;
  double lambda = 1.0;
  double gamma = 1.0;
  double eta = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> r;

  static DualState initial(const Distribution& p, std::size_t n) {
    DualState s;
    const std::size_t m = p.size();
    s.log_phi.assign(m, 0.0);
    s.log_xi.assign(m, 0.0);
    s.log_psi.assign(n, 0.0);
    s.log_varphi.assign(n, 0.0);
    if (n == m) s.r.assign(p.probs().begin(), p.probs().end());
    else s.r.assign(n, 1.0 / static_cast<double>(n));
    return s;
  }

  static std::vector<double> exp_of(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return std::exp(x); });
    return out;
  }
  std::vector<double> phi() const { return exp_of(log_phi); }
  std::vector<double> psi() const { return exp_of(log_psi); }
  std::vector<double> xi() const { return exp_of(log_xi); }
  std::vector<double> varphi() const { return exp_of(log_varphi); }

  // Multipliers recovered from the scalings.
  double beta(std::size_t j) const { return -log_psi[j] - 0.5; }
  double tau(std::size_t j, double eps) const { return -eps * (log_varphi[j] + 0.5); }
};

struct SolverResult {
  double rate = 0.0;  // nats
  double achieved_distortion = 0.0;
  double achieved_perception = 0.0;
  double plan_cost = 0.0;  // sum pi_ij c_ij of the entropic coupling (0 for KL)
  Distribution r;
  Channel w;
  Coupling pi;
  std::vector<ResidualReport> residual_trace;
  int iterations = 0;
  bool converged = false;
  DualState state;

  double final_residual() const {
    return residual_trace.empty() ? std::numeric_limits<double>::infinity()
                                  : residual_trace.back().overall;
  }
};

namespace detail {

// Upper limit on the kernel exponent in the rate-constrained mode.
inline constexpr double kMaxRateMultiplier = 1e8;

inline std::vector<double> add(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

// log of column sums of the channel joint: log sum_i p_i phi_i K_ij.
inline std::vector<double> channel_col_lse(const DualState& st, std::span<const double> lp,
                                           const CostMatrix& d) {
  std::vector<double> out(d.cols());
  col_lse(add(lp, st.log_phi), d, st.lambda, out);
  return out;
}

inline std::vector<double> channel_row_lse(const DualState& st, std::span<const double> lr,
                                           const CostMatrix& d) {
  std::vector<double> out(d.rows());
  row_lse(add(st.log_psi, lr), d, st.lambda, out);
  return out;
}

inline ExpSumConstraint distortion_constraint(const DualState& st, std::span<const double> lp,
                                              std::span<const double> lr,
                                              const CostLevels& levels, double D) {
  ExpSumConstraint g;
  g.cost.assign(levels.levels().begin(), levels.levels().end());
  g.logw = levels.grouped_lse(add(lp, st.log_phi), add(st.log_psi, lr));
  g.budget = D;
  return g;
}

// The exponent is gamma * c / eps; the constraint is solved for t = gamma / eps.
inline ExpSumConstraint perception_constraint(const DualState& st, const CostLevels& levels,
                                              double P) {
  ExpSumConstraint g;
  g.cost.assign(levels.levels().begin(), levels.levels().end());
  g.logw = levels.grouped_lse(st.log_xi, st.log_varphi);
  g.budget = P;
  return g;
}

inline double complementarity(double mult, double g) { return std::abs(mult * g) + std::max(g, 0.0); }

}  // namespace detail

/// Distortion multiplier for the current channel scalings and r.
inline double newton_lambda(const DualState& st, const RdpProblem& prob, const SolverConfig& cfg = {}) {
  auto lp = safe_log(prob.p.probs());
  auto lr = safe_log(st.r);
  detail::CostLevels levels(prob.d);
  auto g = detail::distortion_constraint(st, lp, lr, levels, prob.D);
  return solve_multiplier(g, st.lambda, cfg.root_options()).x;
}

/// Perception multiplier for the current coupling scalings.
inline double newton_gamma(const DualState& st, const RdpProblem& prob, const SolverConfig& cfg = {}) {
  if (!prob.c) throw InvalidArgument("newton_gamma requires a perception cost matrix");
  detail::CostLevels levels(*prob.c);
  auto g = detail::perception_constraint(st, levels, prob.P);
  return prob.epsilon * solve_multiplier(g, st.gamma / prob.epsilon, cfg.root_options()).x;
}

/// Normalizing multiplier of the r update for the current state.
inline double newton_eta(const DualState& st, const RdpProblem& prob, const SolverConfig& cfg = {}) {
  auto lp = safe_log(prob.p.probs());
  auto lr = safe_log(st.r);
  auto col = detail::channel_col_lse(st, lp, prob.d);
  const std::size_t n = prob.n();
  std::vector<double> s(n), b(n);
  for (std::size_t j = 0; j < n; ++j) {
    s[j] = std::exp(st.log_psi[j] + lr[j] + col[j]);
    b[j] = st.beta(j) + (prob.c ? st.tau(j, prob.epsilon) : 0.0);
  }
  return solve_normalizer(s, b, st.eta, cfg.root_options()).x;
}

namespace detail {

inline double kl_gap(std::span<const double> p, std::span<const double> r, double P) {
  double s = P;
  for (std::size_t j = 0; j < p.size(); ++j)
    if (p[j] > 0.0) s -= p[j] * (std::log(p[j]) - safe_log(r[j]));
  return s;
}

}  // namespace detail

namespace detail {

// Mutual information of the channel whose rows are renormalized for kernel
// exponent `mu`; `log_phi` receives the matching row scalings.
inline double rate_at(double mu, std::span<const double> log_psi, std::span<const double> lp,
                      std::span<const double> lr, const CostMatrix& d, std::span<double> log_phi) {
  const std::size_t m = d.rows(), n = d.cols();
  std::vector<double> y(n);
  for (std::size_t j = 0; j < n; ++j) y[j] = log_psi[j] + lr[j];
  row_lse(y, d, mu, log_phi);
  double rate = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    log_phi[i] = -log_phi[i];
    if (lp[i] == std::log(kProbabilityFloor)) continue;
    const double pi = std::exp(lp[i]);
    for (std::size_t j = 0; j < n; ++j) {
      double lk = log_phi[i] - mu * d(i, j) + log_psi[j];
      double wij = std::exp(lk + lr[j]);
      if (wij > 0.0) rate += pi * wij * lk;
    }
  }
  return rate;
}

// Shared residual evaluation. With `rate_budget` set the channel multiplier
// is fixed by the rate equation instead of the distortion budget.
inline ResidualReport residuals(const DualState& st, const RdpProblem& prob,
                                std::optional<double> rate_budget, const CostLevels& dl,
                                const CostLevels* cl) {
  ResidualReport rep;
  const std::size_t m = prob.m(), n = prob.n();
  auto lp = safe_log(prob.p.probs());
  auto lr = safe_log(st.r);

  auto col = channel_col_lse(st, lp, prob.d);
  auto row = channel_row_lse(st, lr, prob.d);
  for (std::size_t j = 0; j < n; ++j) rep.r_psi += std::abs(std::exp(st.log_psi[j] + col[j]) - 1.0);
  for (std::size_t i = 0; i < m; ++i)
    if (prob.p[i] > 0.0) rep.r_phi += std::abs(std::exp(st.log_phi[i] + row[i]) - 1.0);

  if (rate_budget) {
    std::vector<double> scratch(m);
    double G = rate_at(st.lambda, st.log_psi, lp, lr, prob.d, scratch) - *rate_budget;
    rep.r_lambda = st.lambda > 0.0 ? complementarity(1.0 / st.lambda, G) : std::abs(G);
  } else {
    double F = distortion_constraint(st, lp, lr, dl, prob.D).value(st.lambda);
    rep.r_lambda = complementarity(st.lambda, F);
  }
  // Weight of the coupling multipliers in the r equation.
  const double tw = rate_budget ? st.lambda : 1.0;

  if (prob.c) {
    const double t = st.gamma / prob.epsilon;
    std::vector<double> ccol(n), crow(m);
    col_lse(st.log_xi, *prob.c, t, ccol);
    row_lse(st.log_varphi, *prob.c, t, crow);
    for (std::size_t j = 0; j < n; ++j)
      rep.r_varphi += std::abs(std::exp(st.log_varphi[j] + ccol[j]) - st.r[j]);
    for (std::size_t i = 0; i < m; ++i)
      rep.r_xi += std::abs(std::exp(st.log_xi[i] + crow[i]) - prob.p[i]);
    double G = perception_constraint(st, *cl, prob.P).value(t);
    rep.r_gamma = complementarity(st.gamma, G);
    for (std::size_t j = 0; j < n; ++j) {
      double s = std::exp(st.log_psi[j] + lr[j] + col[j]);
      double gap = st.eta - st.beta(j) - tw * st.tau(j, prob.epsilon);
      rep.r_eta += std::abs(s - st.r[j] * gap);
    }
  } else if (prob.P == 0.0) {
    for (std::size_t j = 0; j < n; ++j) rep.r_eta += std::abs(st.r[j] - prob.p[j]);
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      double s = std::exp(st.log_psi[j] + lr[j] + col[j]) + st.gamma * prob.p[j];
      rep.r_eta += std::abs(s - st.r[j] * (st.eta - st.beta(j)));
    }
    double G = kl_gap(prob.p.probs(), st.r, prob.P);
    rep.r_gamma = std::abs(st.gamma * G) + std::max(-G, 0.0);
  }
  rep.finalize();
  return rep;
}

}  // namespace detail

/// L1 residuals of the stationarity and feasibility equations at `st`.
/// Without a perception cost the KL form is used (no coupling block).
inline ResidualReport kkt_residuals(const DualState& st, const RdpProblem& prob) {
  detail::CostLevels dl(prob.d);
  std::optional<detail::CostLevels> cl;
  if (prob.c) cl.emplace(*prob.c);
  return detail::residuals(st, prob, std::nullopt, dl, cl ? &*cl : nullptr);
}

namespace detail {

// One solver run on a problem whose source has no zero-probability symbols.
class AlternatingSolver {
 public:
  AlternatingSolver(const RdpProblem& prob, const SolverConfig& cfg, bool kl,
                    std::optional<double> rate_budget = std::nullopt)
      : prob_(prob), cfg_(cfg), kl_(kl), rate_budget_(rate_budget), lp_(safe_log(prob.p.probs())),
        dlev_(prob.d), st_(DualState::initial(prob.p, prob.n())) {
    if (!kl_) clev_.emplace(*prob.c);
    if (kl_ && prob.P == 0.0) st_.r.assign(prob.p.probs().begin(), prob.p.probs().end());
  }

  SolverResult run() {
    SolverResult res;
    const std::size_t m = prob_.m(), n = prob_.n();
    lr_ = safe_log(st_.r);
    ls_.assign(n, 0.0);
    omega_ = cfg_.relaxation;
    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;
    for (int it = 1; it <= cfg_.max_iter; ++it) {
      channel_block();
      if (kl_) kl_marginal_block();
      else {
        for (int k = 0; k < cfg_.plan_sweeps; ++k) plan_block();
        marginal_block();
      }
      auto rep = residuals(st_, prob_, rate_budget_, dlev_, clev_ ? &*clev_ : nullptr);
      res.residual_trace.push_back(rep);
      res.iterations = it;
      if (rep.overall <= cfg_.residual_tol) {
        res.converged = true;
        break;
      }
      // Over-relaxation can lock into a limit cycle; back off toward 1 when the
      // residual stops setting new minima.
      if (rep.overall < best) {
        best = rep.overall;
        since_best = 0;
      } else if (++since_best >= kStallWindow && omega_ > 1.0) {
        omega_ = 1.0 + 0.5 * (omega_ - 1.0);
        since_best = 0;
      }
    }

    // Outputs from the final iterate.
    Matrix w(m, n);
    double rate = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double lk = st_.log_phi[i] - st_.lambda * prob_.d(i, j) + st_.log_psi[j];
        double wij = std::exp(lk + lr_[j]);
        w(i, j) = wij;
        if (wij > 0.0) rate += prob_.p[i] * wij * lk;
      }
    res.rate = rate;
    res.w = Channel::row_normalized(std::move(w));
    res.r = marginal(res.w, prob_.p);
    res.achieved_distortion = expected_distortion(res.w, prob_.p, prob_.d);
    if (!kl_) {
      const double t = st_.gamma / prob_.epsilon;
      Matrix pi(m, n);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          pi(i, j) = std::exp(st_.log_xi[i] - t * (*prob_.c)(i, j) + st_.log_varphi[j]);
      res.pi = Coupling(std::move(pi));
      res.plan_cost = res.pi.cost(*prob_.c);
      res.achieved_perception = wasserstein(prob_.p, res.r, *prob_.c);
    } else {
      res.achieved_perception = kl_divergence(prob_.p, res.r);
    }
    res.state = st_;
    return res;
  }

 private:
  void channel_block() {
    const std::size_t n = prob_.n();
    std::vector<double> tmp_n(n);
    col_lse(add(lp_, st_.log_phi), prob_.d, st_.lambda, tmp_n);
    for (std::size_t j = 0; j < n; ++j) st_.log_psi[j] = -tmp_n[j];
    check_scaling(st_.log_psi, "psi");
    if (rate_budget_) {
      rate_multiplier();
    } else {
      distortion_multiplier();
    }
    // Column masses of the refreshed channel joint.
    col_lse(add(lp_, st_.log_phi), prob_.d, st_.lambda, tmp_n);
    for (std::size_t j = 0; j < n; ++j) ls_[j] = st_.log_psi[j] + lr_[j] + tmp_n[j];
  }

  void distortion_multiplier() {
    const std::size_t m = prob_.m();
    std::vector<double> tmp_m(m);
    row_lse(add(st_.log_psi, lr_), prob_.d, st_.lambda, tmp_m);
    for (std::size_t i = 0; i < m; ++i) st_.log_phi[i] = -tmp_m[i];
    check_scaling(st_.log_phi, "phi");

    auto g = distortion_constraint(st_, lp_, lr_, dlev_, prob_.D);
    st_.lambda = solve_multiplier(g, st_.lambda, cfg_.root_options()).x;
  }

  // Kernel exponent mu = 1 / (rate multiplier) such that the channel with
  // renormalized rows carries exactly the rate budget. The row scalings are
  // left at their values for the solved mu.
  void rate_multiplier() {
    const double R = *rate_budget_;
    std::vector<double> lphi(prob_.m());
    auto gap = [&](double mu) { return rate_at(mu, st_.log_psi, lp_, lr_, prob_.d, lphi) - R; };
    double mu = 0.0;
    if (gap(0.0) < 0.0) {
      double lo = 0.0, hi = st_.lambda > 0.0 ? 2.0 * st_.lambda : 1.0;
      while (gap(hi) < 0.0 && hi < kMaxRateMultiplier) {
        lo = hi;
        hi = std::min(2.0 * hi, kMaxRateMultiplier);
      }
      if (gap(hi) < 0.0) {
        mu = hi;
      } else {
        std::uintmax_t iters = 200;
        auto tol = boost::math::tools::eps_tolerance<double>(52);
        auto [a, b] = boost::math::tools::toms748_solve(gap, lo, hi, tol, iters);
        mu = 0.5 * (a + b);
      }
    }
    st_.lambda = mu;
    rate_at(mu, st_.log_psi, lp_, lr_, prob_.d, st_.log_phi);
    check_scaling(st_.log_phi, "phi");
  }

  void plan_block() {
    const std::size_t m = prob_.m(), n = prob_.n();
    const CostMatrix& c = *prob_.c;
    const double t = st_.gamma / prob_.epsilon;
    std::vector<double> tmp_n(n), tmp_m(m);
    col_lse(st_.log_xi, c, t, tmp_n);
    for (std::size_t j = 0; j < n; ++j) st_.log_varphi[j] = lr_[j] - tmp_n[j];
    check_scaling(st_.log_varphi, "varphi");
    row_lse(st_.log_varphi, c, t, tmp_m);
    for (std::size_t i = 0; i < m; ++i) st_.log_xi[i] = lp_[i] - tmp_m[i];
    check_scaling(st_.log_xi, "xi");

    auto g = perception_constraint(st_, *clev_, prob_.P);
    st_.gamma = prob_.epsilon * solve_multiplier(g, t, cfg_.root_options()).x;
  }

  void marginal_block() {
    const std::size_t n = prob_.n();
    std::vector<double> s(n), b(n);
    const double tw = rate_budget_ ? st_.lambda : 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = std::exp(ls_[j]);
      b[j] = st_.beta(j) + tw * st_.tau(j, prob_.epsilon);
    }
    st_.eta = solve_normalizer(s, b, st_.eta, cfg_.root_options()).x;
    if (omega_ == 1.0) {
      set_r([&](std::size_t j) { return s[j] / (st_.eta - b[j]); });
    } else {
      const double om = omega_;
      set_r([&](std::size_t j) { return std::exp((1.0 - om) * lr_[j] + om * std::log(s[j] / (st_.eta - b[j]))); });
    }
  }

  void kl_marginal_block() {
    const std::size_t n = prob_.n();
    if (prob_.P == 0.0) {
      st_.gamma = 0.0;
      return;
    }
    std::vector<double> s(n), b(n), num(n), r(n);
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = std::exp(ls_[j]);
      b[j] = st_.beta(j);
    }
    double eta = st_.eta;
    // r(gamma) from the normalizer, and the KL slack P - KL(p || r(gamma)).
    auto slack = [&](double gamma) {
      for (std::size_t j = 0; j < n; ++j) num[j] = gamma * prob_.p[j] + s[j];
      eta = solve_normalizer(num, b, eta, cfg_.root_options()).x;
      for (std::size_t j = 0; j < n; ++j) r[j] = num[j] / (eta - b[j]);
      return kl_gap(prob_.p.probs(), r, prob_.P);
    };
    double gamma = 0.0;
    if (slack(0.0) < 0.0) {
      double lo = 0.0, hi = std::max(1.0, 2.0 * st_.gamma);
      while (slack(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw Error("KL multiplier bracket exceeded");
      }
      std::uintmax_t iters = 200;
      auto tol = boost::math::tools::eps_tolerance<double>(52);
      auto [a, bb] = boost::math::tools::toms748_solve(slack, lo, hi, tol, iters);
      gamma = 0.5 * (a + bb);
      slack(gamma);
    }
    st_.gamma = gamma;
    st_.eta = eta;
    set_r([&](std::size_t j) { return r[j]; });
  }

  template <class F>
  void set_r(F value) {
    const std::size_t n = prob_.n();
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      st_.r[j] = std::max(value(j), 0.0);
      total += st_.r[j];
    }
    for (std::size_t j = 0; j < n; ++j) st_.r[j] /= total;
    lr_ = safe_log(st_.r);
  }

  static constexpr int kStallWindow = 25;

  const RdpProblem& prob_;
  const SolverConfig& cfg_;
  bool kl_;
  double omega_ = 1.0;
  std::optional<double> rate_budget_;
  std::vector<double> lp_, lr_, ls_;
  CostLevels dlev_;
  std::optional<CostLevels> clev_;
  DualState st_;
};

// Removes zero-probability source symbols, solves, and restores them.
inline SolverResult solve_on_support(const RdpProblem& prob, const SolverConfig& cfg, bool kl,
                                     std::optional<double> rate_budget = std::nullopt) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < prob.m(); ++i)
    if (prob.p[i] > 0.0) keep.push_back(i);
  // The KL slack is measured against p on the output alphabet, so the KL
  // form keeps every row; a zero-mass row only carries a floored log weight.
  if (kl || keep.size() == prob.m()) return AlternatingSolver(prob, cfg, kl, rate_budget).run();

  const std::size_t n = prob.n();
  auto take_rows = [&](const CostMatrix& c) {
    Matrix out(keep.size(), n);
    for (std::size_t k = 0; k < keep.size(); ++k)
      for (std::size_t j = 0; j < n; ++j) out(k, j) = c(keep[k], j);
    return CostMatrix(std::move(out));
  };
  std::vector<double> pk;
  for (auto i : keep) pk.push_back(prob.p[i]);
  RdpProblem sub{Distribution::normalized(pk), take_rows(prob.d), std::nullopt, prob.D, prob.P,
                 prob.epsilon};
  if (prob.c) sub.c = take_rows(*prob.c);
  SolverResult res = AlternatingSolver(sub, cfg, kl, rate_budget).run();

  const std::size_t m = prob.m();
  auto lr = safe_log(res.state.r);
  DualState full;
  full.lambda = res.state.lambda;
  full.gamma = res.state.gamma;
  full.eta = res.state.eta;
  full.r = res.state.r;
  full.log_psi = res.state.log_psi;
  full.log_varphi = res.state.log_varphi;
  full.log_phi.assign(m, 0.0);
  full.log_xi.assign(m, std::log(kProbabilityFloor));
  std::vector<double> row(m);
  row_lse(add(full.log_psi, lr), prob.d, full.lambda, row);
  for (std::size_t i = 0; i < m; ++i) full.log_phi[i] = -row[i];
  for (std::size_t k = 0; k < keep.size(); ++k) {
    full.log_phi[keep[k]] = res.state.log_phi[k];
    if (!res.state.log_xi.empty()) full.log_xi[keep[k]] = res.state.log_xi[k];
  }

  Matrix w(m, n), pi(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      w(i, j) = std::exp(full.log_phi[i] - full.lambda * prob.d(i, j) + full.log_psi[j] + lr[j]);
  for (std::size_t k = 0; k < keep.size(); ++k)
    for (std::size_t j = 0; j < n; ++j) pi(keep[k], j) = res.pi.rows() ? res.pi(k, j) : 0.0;
  res.w = Channel::row_normalized(std::move(w));
  if (!kl) res.pi = Coupling(std::move(pi));
  res.state = std::move(full);
  return res;
}

}  // namespace detail

/// Wasserstein perception: transport cost `c`, budget P.
inline SolverResult solve_rdp_wasserstein(const RdpProblem& prob, const SolverConfig& cfg = {}) {
  prob.validate(true);
  cfg.validate();
  return detail::solve_on_support(prob, cfg, false);
}

/// Total-variation perception: the transport cost is the indicator 1{i != j}.
inline SolverResult solve_rdp_tv(RdpProblem prob, const SolverConfig& cfg = {}) {
  if (prob.d.rows() != prob.d.cols())
    throw DimensionMismatch("total variation needs a common source/reconstruction alphabet");
  prob.c = hamming_matrix(prob.m(), prob.n());
  auto res = solve_rdp_wasserstein(prob, cfg);
  res.achieved_perception = tv_distance(prob.p, res.r);
  return res;
}

/// KL perception KL(p || r) <= P; no coupling block.
inline SolverResult solve_rdp_kl(RdpProblem prob, const SolverConfig& cfg = {}) {
  if (prob.d.rows() != prob.d.cols())
    throw DimensionMismatch("KL perception needs a common source/reconstruction alphabet");
  prob.c.reset();
  prob.validate(false);
  cfg.validate();
  return detail::solve_on_support(prob, cfg, true);
}

}  // namespace rdp

namespace rdp {

enum class Perception { wasserstein, tv, kl };

/// Dispatch on the perception measure; `prob.c` is used only for wasserstein.
inline SolverResult solve_rdp(const RdpProblem& prob, Perception measure, const SolverConfig& cfg = {}) {
  switch (measure) {
    case Perception::tv: return solve_rdp_tv(prob, cfg);
    case Perception::kl: return solve_rdp_kl(prob, cfg);
    case Perception::wasserstein: break;
  }
  return solve_rdp_wasserstein(prob, cfg);
}

}  // namespace rdp
