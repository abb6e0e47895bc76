#pragma once

// Perceptual reversible data hiding analysis on 8-bit grayscale images:
// PGM I/O, causal prediction errors, the maximum-entropy marked-error law
// under distortion and perception budgets, and simulated marking.
//
// The marked-error law r maximizes H(r) subject to a coupling of (p, r) with
// d-cost <= D and another with c-cost <= P. Both couplings carry an entropic
// penalty eps * sum pi ln pi; stationarity in r gives
// r_j ~ exp(-eps (ln varphi_d_j + ln varphi_c_j)).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rdp/errors.hpp"
#include "rdp/prob.hpp"
#include "rdp/rdp_solver.hpp"
#include "rdp/root_find.hpp"
#include "rdp/scaling.hpp"
#include "rdp/transport.hpp"

namespace rdp {

struct GrayImage {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, std::uint8_t fill = 0) : width(w), height(h), pixels(w * h, fill) {
    if (w == 0 || h == 0) throw InvalidArgument("image dimensions must be >= 1");
  }

  std::uint8_t& at(std::size_t row, std::size_t col) { return pixels[row * width + col]; }
  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
  bool operator==(const GrayImage&) const = default;
};

enum class PgmEncoding { ascii, binary };  // P2, P5

namespace detail {

// Next header token, skipping whitespace and '#' comments.
inline std::string pgm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) throw FormatError("truncated PGM header");
  return tok;
}

inline std::size_t pgm_number(std::istream& in, const char* what) {
  std::string tok = pgm_token(in);
  if (!std::all_of(tok.begin(), tok.end(), [](unsigned char c) { return std::isdigit(c); }) || tok.size() > 9)
    throw FormatError(std::string("bad PGM ") + what + ": " + tok);
  return static_cast<std::size_t>(std::stoul(tok));
}

}  // namespace detail

inline GrayImage load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic = detail::pgm_token(in);
  if (magic != "P2" && magic != "P5") throw FormatError("not a P2/P5 PGM file: " + path);
  std::size_t w = detail::pgm_number(in, "width");
  std::size_t h = detail::pgm_number(in, "height");
  std::size_t maxval = detail::pgm_number(in, "maxval");
  if (w == 0 || h == 0) throw FormatError("PGM dimensions must be positive");
  if (maxval != 255) throw FormatError("only maxval 255 is supported");
  GrayImage img(w, h);
  if (magic == "P5") {
    // pgm_token consumed exactly one whitespace byte after maxval.
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw FormatError("truncated PGM raster");
  } else {
    for (auto& px : img.pixels) {
      std::size_t v = detail::pgm_number(in, "pixel");
      if (v > maxval) throw FormatError("PGM pixel exceeds maxval");
      px = static_cast<std::uint8_t>(v);
    }
  }
  return img;
}

inline void save_pgm(const GrayImage& img, const std::string& path, PgmEncoding enc = PgmEncoding::binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << (enc == PgmEncoding::binary ? "P5" : "P2") << '\n' << img.width << ' ' << img.height << "\n255\n";
  if (enc == PgmEncoding::binary) {
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  } else {
    for (std::size_t r = 0; r < img.height; ++r) {
      for (std::size_t c = 0; c < img.width; ++c) out << (c ? " " : "") << static_cast<int>(img.at(r, c));
      out << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

struct PredictionErrors {
  std::vector<std::uint8_t> errors;       // (h - prediction + 128) mod 256, raster order
  std::vector<std::uint8_t> predictions;  // causal prediction per pixel
  Distribution histogram;                 // empirical law of `errors` on 0..255
};

inline SupportGrid symbol_grid() {
  std::vector<double> pts(256);
  for (int k = 0; k < 256; ++k) pts[k] = k;
  return SupportGrid(std::move(pts));
}

/// Prediction = floor of the mean of the left and top neighbors; left only on
/// the first row, top only on the first column, 0 at the origin.
inline PredictionErrors prediction_errors(const GrayImage& img) {
  if (img.width < 2 || img.height < 2) throw TooSmall("prediction errors need an image of at least 2x2");
  PredictionErrors pe;
  pe.errors.resize(img.pixels.size());
  pe.predictions.resize(img.pixels.size());
  std::vector<double> counts(256, 0.0);
  for (std::size_t r = 0; r < img.height; ++r)
    for (std::size_t c = 0; c < img.width; ++c) {
      int pred;
      if (r == 0 && c == 0) pred = 0;
      else if (r == 0) pred = img.at(r, c - 1);
      else if (c == 0) pred = img.at(r - 1, c);
      else pred = (img.at(r, c - 1) + img.at(r - 1, c)) / 2;
      std::size_t k = r * img.width + c;
      pe.predictions[k] = static_cast<std::uint8_t>(pred);
      pe.errors[k] = static_cast<std::uint8_t>((img.at(r, c) - pred + 128 + 256) % 256);
      counts[pe.errors[k]] += 1.0;
    }
  pe.histogram = Distribution::normalized(std::move(counts), symbol_grid());
  return pe;
}

struct RdhSolution {
  Distribution r;
  Coupling distortion_plan;  // coupling of (p, r) under d
  Coupling perception_plan;  // coupling of (p, r) under c
  double embedding_rate = 0.0;  // H(r) - H(p), nats per symbol
  double achieved_D = 0.0;      // exact transport cost W_d(p, r)
  double achieved_P = 0.0;      // exact transport cost W_c(p, r)
  double distortion_plan_cost = 0.0;
  double perception_plan_cost = 0.0;
  std::vector<double> residual_trace;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// One entropic coupling of (p, r) with its cost budget.
struct BudgetedCoupling {
  const CostMatrix& c;
  double budget;
  CostLevels levels;
  std::vector<double> log_xi, log_varphi;
  double t = 1.0;  // kernel exponent multiplier: kernel exp(-t c)

  BudgetedCoupling(const CostMatrix& cost, double b)
      : c(cost), budget(b), levels(cost), log_xi(cost.rows(), 0.0), log_varphi(cost.cols(), 0.0) {}

  void sweep(std::span<const double> lp, std::span<const double> lr, const RootOptions& opt) {
    const std::size_t m = c.rows(), n = c.cols();
    std::vector<double> tmp_n(n), tmp_m(m);
    col_lse(log_xi, c, t, tmp_n);
    for (std::size_t j = 0; j < n; ++j) log_varphi[j] = lr[j] - tmp_n[j];
    check_scaling(log_varphi, "varphi");
    row_lse(log_varphi, c, t, tmp_m);
    for (std::size_t i = 0; i < m; ++i) log_xi[i] = lp[i] - tmp_m[i];
    check_scaling(log_xi, "xi");
    ExpSumConstraint g;
    g.cost.assign(levels.levels().begin(), levels.levels().end());
    g.logw = levels.grouped_lse(log_xi, log_varphi);
    g.budget = budget;
    t = solve_multiplier(g, t, opt).x;
  }

  // Marginal errors and complementarity of the budget at the current iterate.
  std::vector<double> residuals(std::span<const double> p, std::span<const double> r) const {
    const std::size_t m = c.rows(), n = c.cols();
    std::vector<double> col(n), row(m);
    col_lse(log_xi, c, t, col);
    row_lse(log_varphi, c, t, row);
    double rc = 0.0, rr = 0.0;
    for (std::size_t j = 0; j < n; ++j) rc += std::abs(std::exp(log_varphi[j] + col[j]) - r[j]);
    for (std::size_t i = 0; i < m; ++i) rr += std::abs(std::exp(log_xi[i] + row[i]) - p[i]);
    ExpSumConstraint g;
    g.cost.assign(levels.levels().begin(), levels.levels().end());
    g.logw = levels.grouped_lse(log_xi, log_varphi);
    g.budget = budget;
    double G = g.value(t);
    return {rc, rr, std::abs(t * G) + std::max(G, 0.0)};
  }

  Coupling plan() const {
    const std::size_t m = c.rows(), n = c.cols();
    Matrix pi(m, n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) pi(i, j) = std::exp(log_xi[i] - t * c(i, j) + log_varphi[j]);
    return Coupling(std::move(pi));
  }
};

inline Coupling diagonal_coupling(const Distribution& p) {
  Matrix pi(p.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) pi(i, i) = p[i];
  return Coupling(std::move(pi));
}

}  // namespace detail

/// Maximum-entropy marked-error law under budgets D (cost d) and P (cost c).
/// A zero budget pins r = p; the matrices must then vanish exactly on the
/// diagonal.
inline RdhSolution solve_rdh_rdp(const Distribution& p, const CostMatrix& d, const CostMatrix& c, double D,
                                 double P, double epsilon = 0.01, const SolverConfig& cfg = {}) {
  const std::size_t n = p.size();
  if (d.rows() != n || d.cols() != n || c.rows() != n || c.cols() != n)
    throw DimensionMismatch("solve_rdh_rdp: cost matrices must be square over the symbol alphabet");
  if (!std::isfinite(D) || D < 0.0 || !std::isfinite(P) || P < 0.0) throw DomainError("budgets must be >= 0");
  if (!std::isfinite(epsilon) || !(epsilon > 0.0)) throw DomainError("epsilon must be > 0");
  cfg.validate();

  RdhSolution sol;
  if (D == 0.0 || P == 0.0) {
    const CostMatrix& zero_side = D == 0.0 ? d : c;
    if (!zero_side.zero_iff_diagonal()) throw Infeasible("a zero budget needs a cost vanishing only on the diagonal");
    sol.r = p;
    sol.distortion_plan = detail::diagonal_coupling(p);
    sol.perception_plan = detail::diagonal_coupling(p);
    sol.converged = true;
    return sol;
  }

  // Zero-probability source symbols carry no coupling mass; drop their rows.
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i)
    if (p[i] > 0.0) keep.push_back(i);
  auto take_rows = [&](const CostMatrix& cm) {
    Matrix out(keep.size(), n);
    for (std::size_t k = 0; k < keep.size(); ++k)
      for (std::size_t j = 0; j < n; ++j) out(k, j) = cm(keep[k], j);
    return CostMatrix(std::move(out));
  };
  const CostMatrix dk = take_rows(d), ck = take_rows(c);
  std::vector<double> pk;
  for (auto i : keep) pk.push_back(p[i]);
  const auto lp = safe_log(pk);
  std::vector<double> r(n, 1.0 / static_cast<double>(n));
  auto lr = safe_log(r);
  detail::BudgetedCoupling dist(dk, D), perc(ck, P);
  const auto opt = cfg.root_options();
  for (int it = 1; it <= cfg.max_iter; ++it) {
    for (int k = 0; k < cfg.plan_sweeps; ++k) {
      dist.sweep(lp, lr, opt);
      perc.sweep(lp, lr, opt);
    }
    // r_j ~ exp(tau_d_j + tau_c_j) with tau_j = -eps (ln varphi_j + 1/2).
    std::vector<double> lnew(n);
    for (std::size_t j = 0; j < n; ++j) lnew[j] = -epsilon * (dist.log_varphi[j] + perc.log_varphi[j]);
    const double z = detail::lse(lnew);
    for (std::size_t j = 0; j < n; ++j) {
      lr[j] = lnew[j] - z;
      r[j] = std::exp(lr[j]);
    }

    auto a = dist.residuals(pk, r);
    auto b = perc.residuals(pk, r);
    double s = 0.0;
    for (double v : a) s += v * v;
    for (double v : b) s += v * v;
    sol.residual_trace.push_back(std::sqrt(s / 6.0));
    sol.iterations = it;
    if (sol.residual_trace.back() <= cfg.residual_tol) {
      sol.converged = true;
      break;
    }
  }
  sol.r = Distribution::normalized(r, p.support());
  auto expand = [&](const Coupling& sub) {
    Matrix pi(n, n);
    for (std::size_t k = 0; k < keep.size(); ++k)
      for (std::size_t j = 0; j < n; ++j) pi(keep[k], j) = sub(k, j);
    return Coupling(std::move(pi));
  };
  sol.distortion_plan = expand(dist.plan());
  sol.perception_plan = expand(perc.plan());
  sol.distortion_plan_cost = sol.distortion_plan.cost(d);
  sol.perception_plan_cost = sol.perception_plan.cost(c);
  sol.embedding_rate = entropy(sol.r) - entropy(p);
  sol.achieved_D = wasserstein(p, sol.r, d);
  sol.achieved_P = wasserstein(p, sol.r, c);
  return sol;
}

struct MarkingResult {
  GrayImage marked;
  double psnr = 0.0;  // +inf when the marked image equals the original
  Distribution marked_histogram;
};

inline double psnr(const GrayImage& a, const GrayImage& b) {
  if (a.width != b.width || a.height != b.height) throw DimensionMismatch("psnr: image sizes differ");
  double se = 0.0;
  for (std::size_t k = 0; k < a.pixels.size(); ++k) {
    double e = static_cast<double>(a.pixels[k]) - static_cast<double>(b.pixels[k]);
    se += e * e;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / (se / static_cast<double>(a.pixels.size())));
}

/// Draws each marked prediction error from w_ij = pi_ij / p_i of the
/// distortion-side coupling (inverse-CDF sampling on a 53-bit uniform from
/// mt19937_64) and maps it back to a pixel via (y + prediction - 128) mod 256.
inline MarkingResult simulate_marking(const GrayImage& img, const RdhSolution& sol,
                                      std::optional<std::uint64_t> seed) {
  if (!seed) throw SeedRequired("simulate_marking needs an explicit seed");
  PredictionErrors pe = prediction_errors(img);
  const Coupling& pi = sol.distortion_plan;
  if (pi.rows() != 256 || pi.cols() != 256) throw DimensionMismatch("solution is not over 256 symbols");

  std::vector<std::vector<double>> cdf(256);
  for (std::size_t i = 0; i < 256; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < 256; ++j) total += pi(i, j);
    if (!(total > 0.0)) continue;
    cdf[i].resize(256);
    double acc = 0.0;
    for (std::size_t j = 0; j < 256; ++j) {
      acc += pi(i, j) / total;
      cdf[i][j] = acc;
    }
  }

  std::mt19937_64 rng(*seed);
  MarkingResult out;
  out.marked = GrayImage(img.width, img.height);
  std::vector<double> counts(256, 0.0);
  for (std::size_t k = 0; k < img.pixels.size(); ++k) {
    const std::uint8_t x = pe.errors[k];
    if (cdf[x].empty()) throw DimensionMismatch("solution has no mass on an observed prediction error");
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    auto it = std::upper_bound(cdf[x].begin(), cdf[x].end(), u * cdf[x].back());
    std::size_t y = std::min<std::size_t>(static_cast<std::size_t>(it - cdf[x].begin()), 255);
    counts[y] += 1.0;
    out.marked.pixels[k] = static_cast<std::uint8_t>((y + pe.predictions[k] + 256 - 128) % 256);
  }
  out.psnr = psnr(img, out.marked);
  out.marked_histogram = Distribution::normalized(std::move(counts), symbol_grid());
  return out;
}

}  // namespace rdp
