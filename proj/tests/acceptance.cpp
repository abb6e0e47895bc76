// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rdp/rdp.hpp"

using namespace rdp;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const Distribution kBinary = Distribution::bernoulli(0.1);

RdpProblem binary_tv(double D, double P, double eps = 0.01) {
  return RdpProblem{kBinary, hamming_matrix(2, 2), std::nullopt, D, P, eps};
}

std::vector<double> d_grid_binary() {
  std::vector<double> g;
  for (int k = 1; k <= 9; ++k) g.push_back(0.01 * k);
  return g;
}

// Up-steps of the overall residual over the last `window` iterations.
int up_steps(const std::vector<ResidualReport>& trace, std::size_t window = 50) {
  if (trace.size() < window + 1) return 0;
  int ups = 0;
  for (std::size_t k = trace.size() - window; k < trace.size(); ++k) ups += trace[k].overall >= trace[k - 1].overall;
  return ups;
}

GrayImage synthetic_image(std::size_t n, std::uint64_t seed) {
  GrayImage g(n, n);
  std::mt19937_64 rng(seed);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      double v = 128 + 60 * std::sin(r * 0.031) * std::cos(c * 0.017) + 30 * std::sin((r + c) * 0.11) +
                 static_cast<double>(rng() % 9) - 4;
      g.at(r, c) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  return g;
}

void binary_closed_form() {
  auto t0 = Clock::now();
  double worst = 0.0;
  for (double P : {0.02, 0.06, 10.0})
    for (double D : d_grid_binary())
      worst = std::max(worst, std::abs(solve_rdp_tv(binary_tv(D, P)).rate - binary_rdp_closed_form(0.1, D, P)));
  double t = seconds_since(t0);
  report(1, worst <= 1e-4 && t < 30.0, "binary TV rate matches closed form on the 9x3 grid",
         fmt("max error %.2e, %.1f s", worst, t));
}

void epsilon_accuracy() {
  bool ok = true;
  std::string detail;
  for (double P : {0.02, 0.06}) {
    std::vector<double> errs;
    for (double eps : {0.1, 0.05, 0.01, 0.005}) {
      double worst = 0.0;
      for (double D : d_grid_binary())
        worst = std::max(worst, std::abs(solve_rdp_tv(binary_tv(D, P, eps)).rate - binary_rdp_closed_form(0.1, D, P)));
      errs.push_back(worst);
    }
    ok = ok && errs[2] <= 1e-5;
    for (std::size_t k = 0; k + 1 < errs.size(); ++k) ok = ok && errs[k + 1] <= errs[k];
    detail += fmt("P=%g: %.2e", P, errs[0]);
    for (std::size_t k = 1; k < errs.size(); ++k) detail += fmt(" > %.2e", errs[k]);
    detail += "; ";
  }
  detail.resize(detail.size() - 2);
  report(2, ok, "epsilon sequence 0.1, 0.05, 0.01, 0.005 has non-increasing max error, <= 1e-5 at 0.01", detail);
}

void gaussian_closed_form() {
  auto t0 = Clock::now();
  auto p = discretize_gaussian(GaussianSpec{0.0, 2.0, 8.0, 0.5});
  auto c = squared_error_matrix(p.support(), p.support());
  double worst = 0.0;
  for (double P : {0.2, 2.0})
    for (int k = 1; k <= 7; ++k) {
      double D = 0.5 * k;
      auto res = solve_rdp_wasserstein(RdpProblem{p, c, c, D, P, 0.01});
      worst = std::max(worst, std::abs(res.rate - gaussian_rdp_closed_form(2.0, D, P)));
    }
  double t = seconds_since(t0);
  report(3, worst <= 1e-2 && t < 120.0, "Gaussian W2 rate matches closed form (sigma 2, delta 0.5)",
         fmt("max error %.2e, %.1f s", worst, t));
}

void kkt_convergence() {
  bool ok = true;
  std::string detail;
  for (double D : {0.02, 0.05, 0.08}) {
    auto res = solve_rdp_tv(binary_tv(D, 0.06));
    int ups = up_steps(res.residual_trace);
    ok = ok && res.converged && res.iterations <= 1000 && ups == 0;
    detail += fmt("binary D=%g: %.0f it, ", D, res.iterations) + fmt("res %.1e, %.0f up-steps; ", res.final_residual(), ups);
  }
  auto p = discretize_gaussian(GaussianSpec{0.0, 2.0, 8.0, 0.5});
  auto c = squared_error_matrix(p.support(), p.support());
  for (double D : {0.5, 1.5, 2.5, 3.5}) {
    auto res = solve_rdp_wasserstein(RdpProblem{p, c, c, D, 2.0, 0.01});
    int ups = up_steps(res.residual_trace);
    ok = ok && res.converged && res.iterations <= 1000 && ups == 0;
    detail += fmt("gauss D=%g: %.0f it, ", D, res.iterations) + fmt("res %.1e, %.0f up-steps; ", res.final_residual(), ups);
  }
  detail.resize(detail.size() - 2);
  report(4, ok, "residual <= 1e-10 within 1000 iterations, monotone over the last 50", detail);
}

void transition_geometry() {
  SolverConfig cfg;
  cfg.max_iter = 20000;
  auto h2 = hamming_matrix(2, 2);

  auto grid = linspace(0.005, 0.095, 20);
  auto curve = transition_curve_via_rd(kBinary, h2, h2, grid, Perception::wasserstein, cfg, 1e-3);
  double f_err = 0.0, excess = -1.0;
  for (const auto& tp : curve) {
    f_err = std::max(f_err, std::abs(tp.P - tp.D * 0.8 / (1.0 - 2.0 * tp.D)));
    excess = std::max(excess, tp.P - tp.D);
  }
  auto ep = endpoint_identity_check(kBinary, h2, 0);

  auto p = discretize_gaussian(GaussianSpec{0.0, 2.0, 8.0, 0.1});
  auto c = squared_error_matrix(p.support(), p.support());
  std::vector<double> gd{0.5, 1.5, 2.5, 3.5};
  double gf = 0.0;
  for (const auto& tp : transition_curve_via_rd(p, c, c, gd, Perception::wasserstein, cfg, 1e-3))
    gf = std::max(gf, std::abs(tp.P - gaussian_transition_f(2.0, tp.D)));
  double gh = 0.0;
  for (const auto& tp : upper_bound_h(p, c, c, linspace(0.0, 4.0, 21)))
    gh = std::max(gh, std::abs(tp.D - gaussian_upper_h(2.0, tp.P)));

  bool ok = f_err <= 1e-3 && ep.difference <= 1e-6 && excess <= 0.0 && gf <= 1e-2 && gh <= 1e-2;
  report(5, ok, "transition curves f and h against their formulas, endpoint identity, f(D) <= D",
         fmt("binary f err %.2e, endpoint diff %.1e, max f-D %.2e; ", f_err, ep.difference, excess) +
             fmt("gauss f err %.2e, h err %.2e", gf, gh));
}

void transition_detection() {
  SolverConfig cfg;
  cfg.max_iter = 20000;
  auto h2 = hamming_matrix(2, 2);
  auto grid = linspace(0.0, 0.1, 50);
  const double step = grid[1] - grid[0];
  bool ok = true;
  std::string detail;
  for (double R : {0.05, 0.1}) {
    // Distortion of the rate-distortion curve at rate R, then the transition perception there.
    double DR = oracle::bisect([&](double D) { return R - (oracle::hb(0.1) - oracle::hb(D)); }, 0.0, 0.1);
    double target = DR * 0.8 / (1.0 - 2.0 * DR);
    auto samples = drp_cross_section(kBinary, h2, h2, R, grid, cfg, 1e-3);
    try {
      auto tp = detect_transition_point(samples, 1e-3);
      double off = std::abs(tp.P - target) / step;
      ok = ok && off <= 1.0;
      detail += fmt("R=%g: detected %.4f vs %.4f", R, tp.P, target) + fmt(" (%.2f steps); ", off);
    } catch (const NoTransitionFound&) {
      ok = false;
      detail += fmt("R=%g: no transition found; ", R);
    }
  }
  detail.resize(detail.size() - 2);
  report(6, ok, "secant-slope detection on DRP cross-sections within one grid step", detail);
}

void n_letter() {
  double worst = 0.0;
  for (int n : {1, 2, 4, 16}) {
    RdpProblem prob{kBinary, hamming_matrix(2, 2), hamming_matrix(2, 2), 0.04, 0.06};
    RdpProblem direct = prob;
    direct.P = prob.P / n;
    worst = std::max(worst, std::abs(n_letter_rate(n, prob) - solve_rdp_wasserstein(direct).rate));
  }
  report(7, worst <= 1e-8, "n-letter rate equals the single-letter rate at P/n", fmt("max diff %.1e", worst));
}

void oracle_equivalence() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst2 = 0.0, worst3 = 0.0;
  for (int t = 0; t < 20; ++t) {
    double q = 0.05 + 0.4 * u(rng);
    std::vector<double> p{1.0 - q, q};
    double D = 0.01 + 0.9 * q * u(rng), P = 0.01 + 0.9 * q * u(rng);
    oracle::ChannelProblem pr{p, oracle::hamming(2, 2), D, [&](const std::vector<double>& r) { return oracle::tv(p, r); },
                              P};
    double ref = oracle::min_rate_2x2(pr);
    double got = solve_rdp_tv(RdpProblem{Distribution(p), hamming_matrix(2, 2), std::nullopt, D, P}).rate;
    worst2 = std::max(worst2, std::abs(got - ref));
  }
  for (int t = 0; t < 10; ++t) {
    auto pd = Distribution::normalized({0.2 + u(rng), 0.2 + u(rng), 0.2 + u(rng)});
    std::vector<double> p(pd.probs().begin(), pd.probs().end());
    double minor = 1.0 - *std::max_element(p.begin(), p.end());
    double D = 0.02 + 0.8 * minor * u(rng), P = 0.01 + 0.5 * minor * u(rng);
    oracle::ChannelProblem pr{p, oracle::hamming(3, 3), D, [&](const std::vector<double>& r) { return oracle::tv(p, r); },
                              P};
    double ref = oracle::min_rate_marginal_grid3(pr);
    double got = solve_rdp_tv(RdpProblem{pd, hamming_matrix(3, 3), std::nullopt, D, P}).rate;
    worst3 = std::max(worst3, std::abs(got - ref));
  }
  report(8, worst2 <= 1e-3 && worst3 <= 1e-3, "solver matches brute-force oracles on random 2x2 and 3x3 instances",
         fmt("2x2 max diff %.2e, 3x3 max diff %.2e", worst2, worst3));
}

void drp_inverse() {
  auto h2 = hamming_matrix(2, 2);
  double worst = 0.0;
  int pairs = 0;
  for (double P : {0.02, 0.04, 0.06, 0.08, 0.09}) {
    // Both constraints are active strictly between the two switching points.
    double s1 = P / (1.0 - 2.0 * (0.1 - P)), s2 = 2 * 0.1 * 0.9 - 0.8 * P;
    for (double frac : {0.3, 0.7}) {
      double D = s1 + frac * (s2 - s1);
      double R = solve_rdp_wasserstein(RdpProblem{kBinary, h2, h2, D, P}).rate;
      double got = solve_drp(DrpProblem{kBinary, h2, h2, R, P}).achieved_distortion;
      worst = std::max(worst, std::abs(got - D));
      ++pairs;
    }
  }
  double h_err = 0.0;
  for (double P : linspace(0.0, 0.2, 21))
    h_err = std::max(h_err, std::abs(solve_drp(DrpProblem{kBinary, h2, h2, 0.0, P}).achieved_distortion -
                                     binary_upper_h(0.1, P)));
  report(9, pairs == 10 && worst <= 1e-3 && h_err <= 1e-4, "DRP inverts RDP on 10 active pairs, zero rate matches h(P)",
         fmt("round-trip max diff %.2e, h max diff %.2e", worst, h_err));
}

void rdh_properties() {
  auto img = synthetic_image(512, 7);
  auto pe = prediction_errors(img);
  auto sq = squared_error_matrix(symbol_grid(), symbol_grid());
  bool certified = true, monotone = true, close = true;
  double prev = -1.0, worst_tv = 0.0, worst_excess = -1.0;
  for (double P : {1.0, 10.0, 100.0, 200.0}) {
    auto sol = solve_rdh_rdp(pe.histogram, sq, sq, 100.0, P);
    double excess = std::max(sol.achieved_D - 100.0, sol.achieved_P - P);
    worst_excess = std::max(worst_excess, excess);
    certified = certified && sol.converged && excess <= 1e-6;
    monotone = monotone && sol.embedding_rate >= prev;
    prev = sol.embedding_rate;
    auto mk = simulate_marking(img, sol, 1);
    double tv = tv_distance(mk.marked_histogram, sol.r);
    worst_tv = std::max(worst_tv, tv);
    close = close && tv <= 0.02;
  }

  std::vector<double> pv{0.7, 0.1, 0.1, 0.1};
  auto h4 = hamming_matrix(4, 4);
  std::array<double, 4> arg{};
  double ref = oracle::max_entropy_simplex4(
      [&](const std::array<double, 4>& r) {
        return oracle::tv(pv, std::vector<double>(r.begin(), r.end())) <= 0.1 + 1e-12;
      },
      arg);
  auto toy = solve_rdh_rdp(Distribution(pv), h4, h4, 0.2, 0.1);
  double toy_err = std::abs(entropy(toy.r) - ref);

  report(10, certified && monotone && close && toy_err <= 1e-3,
         "RDH on a 512x512 image: exact-OT certified budgets, rate non-decreasing in P, marked histogram, 4-symbol toy",
         fmt("max budget excess %.1e, marked TV %.4f, toy diff %.1e", worst_excess, worst_tv, toy_err) +
             (monotone ? ", monotone" : ", NOT monotone"));
}

void kl_variant() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    double q = 0.05 + 0.4 * u(rng);
    std::vector<double> p{1.0 - q, q};
    double D = 0.01 + 0.9 * q * u(rng), P = 0.002 + 0.1 * u(rng);
    oracle::ChannelProblem pr{p, oracle::hamming(2, 2), D, [&](const std::vector<double>& r) { return oracle::kl(p, r); },
                              P};
    double ref = oracle::min_rate_2x2(pr);
    double got = solve_rdp_kl(RdpProblem{Distribution(p), hamming_matrix(2, 2), std::nullopt, D, P}).rate;
    worst = std::max(worst, std::abs(got - ref));
  }
  bool monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  for (double P : {0.0, 0.005, 0.01, 0.02, 0.05, 0.1, 0.5}) {
    double rate = solve_rdp_kl(binary_tv(0.04, P)).rate;
    monotone = monotone && rate <= prev + 1e-9;
    prev = rate;
  }
  report(11, worst <= 1e-3 && monotone, "KL variant matches the 2x2 oracle, rate non-increasing in P",
         fmt("max diff %.2e", worst) + (monotone ? ", monotone" : ", NOT monotone"));
}

}  // namespace

int main() {
  binary_closed_form();
  epsilon_accuracy();
  gaussian_closed_form();
  kkt_convergence();
  transition_geometry();
  transition_detection();
  n_letter();
  oracle_equivalence();
  drp_inverse();
  rdh_properties();
  kl_variant();
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
