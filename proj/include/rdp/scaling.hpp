#pragma once

// Log-domain kernels shared by the alternating scaling solvers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rdp/errors.hpp"
#include "rdp/prob.hpp"

namespace rdp {

inline constexpr double kProbabilityFloor = 1e-300;
inline double safe_log(double x) { return std::log(std::max(x, kProbabilityFloor)); }

inline std::vector<double> safe_log(std::span<const double> x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = safe_log(x[i]);
  return out;
}

namespace detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// out_j = log sum_i exp(x_i - t * c_ij)
inline double lse(std::span<const double> v);

inline void col_lse(std::span<const double> x, const CostMatrix& c, double t,
                    std::span<double> out) {
  const std::size_t m = c.rows(), n = c.cols();
  if (t == 0.0) {
    std::fill(out.begin(), out.end(), lse(x));
    return;
  }
  std::vector<double> z(m);
  for (std::size_t j = 0; j < n; ++j) {
    double mx = kNegInf;
    for (std::size_t i = 0; i < m; ++i) {
      z[i] = x[i] - t * c(i, j);
      mx = std::max(mx, z[i]);
    }
    if (mx == kNegInf) {
      out[j] = kNegInf;
      continue;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += std::exp(z[i] - mx);
    out[j] = mx + std::log(s);
  }
}

// out_i = log sum_j exp(y_j - t * c_ij)
inline void row_lse(std::span<const double> y, const CostMatrix& c, double t,
                    std::span<double> out) {
  const std::size_t m = c.rows(), n = c.cols();
  if (t == 0.0) {
    std::fill(out.begin(), out.end(), lse(y));
    return;
  }
  std::vector<double> z(n);
  for (std::size_t i = 0; i < m; ++i) {
    double mx = kNegInf;
    for (std::size_t j = 0; j < n; ++j) {
      z[j] = y[j] - t * c(i, j);
      mx = std::max(mx, z[j]);
    }
    if (mx == kNegInf) {
      out[i] = kNegInf;
      continue;
    }
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp(z[j] - mx);
    out[i] = mx + std::log(s);
  }
}

inline double lse(std::span<const double> v) {
  double mx = kNegInf;
  for (double x : v) mx = std::max(mx, x);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// Scalings are stored as logs, so magnitudes far beyond 1e300 are still
// exact; only a non-finite log is an overflow.
inline void check_scaling(std::span<const double> logs, const char* name) {
  for (double v : logs)
    if (!std::isfinite(v))
      throw NumericalOverflow(std::string("scaling vector ") + name + " left the representable range");
}

// Partition of the cells of a cost matrix by distinct entry value, so that
// sums of the form sum_ij c_ij exp(a_ij - t c_ij) reduce to one exponential
// per level.
class CostLevels {
 public:
  explicit CostLevels(const CostMatrix& c) : rows_(c.rows()), cols_(c.cols()) {
    std::map<double, std::size_t> index;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) index.emplace(c(i, j), 0);
    for (auto& [v, k] : index) {
      k = levels_.size();
      levels_.push_back(v);
    }
    cell_level_.resize(rows_ * cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) cell_level_[i * cols_ + j] = index.at(c(i, j));
  }

  std::span<const double> levels() const { return levels_; }

  // logw_k = log sum_{cells at level k} exp(a_i + b_j)
  std::vector<double> grouped_lse(std::span<const double> a, std::span<const double> b) const {
    const std::size_t k = levels_.size();
    std::vector<double> mx(k, kNegInf), s(k, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) {
        auto l = cell_level_[i * cols_ + j];
        mx[l] = std::max(mx[l], a[i] + b[j]);
      }
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) {
        auto l = cell_level_[i * cols_ + j];
        if (mx[l] != kNegInf) s[l] += std::exp(a[i] + b[j] - mx[l]);
      }
    for (std::size_t l = 0; l < k; ++l) mx[l] = mx[l] == kNegInf ? kNegInf : mx[l] + std::log(s[l]);
    return mx;
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> levels_;
  std::vector<std::size_t> cell_level_;
};

}  // namespace detail
}  // namespace rdp
