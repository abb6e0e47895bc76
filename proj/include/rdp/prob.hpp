#pragma once

// Finite-alphabet probability primitives: distributions, channels, couplings
// and cost matrices, plus the information measures evaluated on them.
//
// All logarithms are natural; 0 log 0 and 0 log(0/0) are taken as 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rdp/errors.hpp"

namespace rdp {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != m.cols_)
        throw DimensionMismatch("ragged matrix rows");
      std::copy(rows[i].begin(), rows[i].end(), m.data_.begin() + i * m.cols_);
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> values() const { return data_; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  std::vector<double> row_sums() const {
    std::vector<double> s(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) s[i] += (*this)(i, j);
    return s;
  }

  std::vector<double> col_sums() const {
    std::vector<double> s(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) s[j] += (*this)(i, j);
    return s;
  }

  double max_value() const {
    return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Ordered support points x_1 < ... < x_M of a finite alphabet.
class SupportGrid {
 public:
  SupportGrid() = default;
  explicit SupportGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.empty()) throw InvalidArgument("support grid is empty");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!std::isfinite(points_[i]))
        throw InvalidArgument("support grid has a non-finite point");
      if (i > 0 && !(points_[i] > points_[i - 1]))
        throw InvalidArgument("support grid is not strictly increasing");
    }
  }

  /// Points 0, 1, ..., n-1.
  static SupportGrid indices(std::size_t n) {
    std::vector<double> pts(n);
    std::iota(pts.begin(), pts.end(), 0.0);
    return SupportGrid(std::move(pts));
  }

  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  std::span<const double> points() const { return points_; }

  friend bool operator==(const SupportGrid&, const SupportGrid&) = default;

 private:
  std::vector<double> points_;
};

inline constexpr double kSimplexTolerance = 1e-12;

/// Probability vector over a support grid.
class Distribution {
 public:
  Distribution() = default;

  Distribution(std::vector<double> probs, SupportGrid support)
      : probs_(std::move(probs)), support_(std::move(support)) {
    if (probs_.size() != support_.size())
      throw DimensionMismatch("probability vector and support differ in size");
    validate();
  }

  explicit Distribution(std::vector<double> probs)
      : Distribution(probs, SupportGrid::indices(probs.size())) {}

  /// Scales non-negative weights to unit mass.
  static Distribution normalized(std::vector<double> weights, SupportGrid support) {
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw InvalidArgument("weights must be finite and non-negative");
      total += w;
    }
    if (!(total > 0.0)) throw InvalidArgument("weights have zero total mass");
    for (double& w : weights) w /= total;
    return Distribution(std::move(weights), std::move(support));
  }

  static Distribution normalized(std::vector<double> weights) {
    auto n = weights.size();
    return normalized(std::move(weights), SupportGrid::indices(n));
  }

  static Distribution uniform(std::size_t n) {
    return Distribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  /// (1-p, p) on {0, 1}.
  static Distribution bernoulli(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("bernoulli parameter outside [0,1]");
    return Distribution({1.0 - p, p}, SupportGrid({0.0, 1.0}));
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }
  const SupportGrid& support() const { return support_; }

 private:
  void validate() const {
    if (probs_.empty()) throw InvalidArgument("distribution is empty");
    double total = 0.0;
    for (double v : probs_) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw InvalidArgument("probabilities must be finite and non-negative");
      total += v;
    }
    if (std::abs(total - 1.0) > kSimplexTolerance * std::max<double>(1.0, probs_.size())) {
      std::ostringstream os;
      os << "probabilities sum to " << total << ", not 1";
      throw InvalidArgument(os.str());
    }
  }

  std::vector<double> probs_;
  SupportGrid support_;
};

/// Non-negative M x N matrix of distortion or transport costs.
class CostMatrix {
 public:
  CostMatrix() = default;
  explicit CostMatrix(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw InvalidArgument("cost matrix is empty");
    for (double v : entries_.values())
      if (!(v >= 0.0) || !std::isfinite(v))
        throw InvalidArgument("cost entries must be finite and non-negative");
  }

  std::size_t rows() const { return entries_.rows(); }
  std::size_t cols() const { return entries_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
  const Matrix& matrix() const { return entries_; }
  double max_entry() const { return entries_.max_value(); }

  CostMatrix transposed() const { return CostMatrix(entries_.transposed()); }

  /// Whether c_ij = 0 exactly on the diagonal and only there (square only).
  bool zero_iff_diagonal() const {
    if (rows() != cols()) return false;
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t j = 0; j < cols(); ++j)
        if ((entries_(i, j) == 0.0) != (i == j)) return false;
    return true;
  }

 private:
  Matrix entries_;
};

inline constexpr double kChannelRowTolerance = 1e-10;

/// Row-stochastic conditional matrix w_ij = W(xhat_j | x_i).
class Channel {
 public:
  Channel() = default;
  explicit Channel(Matrix w) : w_(std::move(w)) {
    if (w_.empty()) throw InvalidArgument("channel is empty");
    for (std::size_t i = 0; i < w_.rows(); ++i) {
      double s = 0.0;
      for (double v : w_.row(i)) {
        if (!(v >= 0.0) || !std::isfinite(v))
          throw InvalidArgument("channel entries must be finite and non-negative");
        s += v;
      }
      if (std::abs(s - 1.0) > kChannelRowTolerance)
        throw InvalidArgument("channel row does not sum to 1");
    }
  }

  /// Divides every row by its sum; rows of zero mass become uniform.
  static Channel row_normalized(Matrix w) {
    for (std::size_t i = 0; i < w.rows(); ++i) {
      auto row = w.row(i);
      double s = std::accumulate(row.begin(), row.end(), 0.0);
      for (double& v : row) v = s > 0.0 ? v / s : 1.0 / static_cast<double>(row.size());
    }
    return Channel(std::move(w));
  }

  static Channel identity(std::size_t n) {
    Matrix w(n, n);
    for (std::size_t i = 0; i < n; ++i) w(i, i) = 1.0;
    return Channel(std::move(w));
  }

  /// Every row equal to q: the output is independent of the input.
  static Channel constant_rows(const Distribution& q, std::size_t rows) {
    Matrix w(rows, q.size());
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < q.size(); ++j) w(i, j) = q[j];
    return Channel(std::move(w));
  }

  std::size_t rows() const { return w_.rows(); }
  std::size_t cols() const { return w_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return w_(i, j); }
  const Matrix& matrix() const { return w_; }

 private:
  Matrix w_;
};

/// Joint matrix with (approximately) prescribed marginals.
class Coupling {
 public:
  Coupling() = default;
  explicit Coupling(Matrix pi) : pi_(std::move(pi)) {
    for (double v : pi_.values())
      if (!(v >= 0.0) || !std::isfinite(v))
        throw InvalidArgument("coupling entries must be finite and non-negative");
  }

  std::size_t rows() const { return pi_.rows(); }
  std::size_t cols() const { return pi_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return pi_(i, j); }
  const Matrix& matrix() const { return pi_; }

  std::vector<double> left_marginal() const { return pi_.row_sums(); }
  std::vector<double> right_marginal() const { return pi_.col_sums(); }

  /// Largest absolute deviation of either marginal from the stated one.
  double marginal_error(std::span<const double> left, std::span<const double> right) const {
    if (left.size() != rows() || right.size() != cols())
      throw DimensionMismatch("marginal sizes do not match coupling");
    double err = 0.0;
    auto rs = left_marginal();
    auto cs = right_marginal();
    for (std::size_t i = 0; i < rows(); ++i) err = std::max(err, std::abs(rs[i] - left[i]));
    for (std::size_t j = 0; j < cols(); ++j) err = std::max(err, std::abs(cs[j] - right[j]));
    return err;
  }

  /// sum_ij pi_ij c_ij
  double cost(const CostMatrix& c) const {
    if (c.rows() != rows() || c.cols() != cols())
      throw DimensionMismatch("cost matrix does not match coupling");
    double s = 0.0;
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t j = 0; j < cols(); ++j) s += pi_(i, j) * c(i, j);
    return s;
  }

 private:
  Matrix pi_;
};

// x log x with the continuous extension at 0.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

inline double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) h -= xlogx(v);
  return h;
}

inline double entropy(const Distribution& p) { return entropy(p.probs()); }

inline double kl_divergence(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) throw DimensionMismatch("kl_divergence: sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0)
      throw AbsoluteContinuityViolation("kl_divergence: p_i > 0 where q_i = 0");
    s += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return std::max(s, 0.0);
}

inline double tv_distance(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) throw DimensionMismatch("tv_distance: sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

inline Distribution marginal(const Channel& ch, const Distribution& p) {
  if (ch.rows() != p.size()) throw DimensionMismatch("marginal: channel rows != |p|");
  std::vector<double> r(ch.cols(), 0.0);
  for (std::size_t i = 0; i < ch.rows(); ++i)
    for (std::size_t j = 0; j < ch.cols(); ++j) r[j] += ch(i, j) * p[i];
  return Distribution::normalized(std::move(r));
}

/// I(X; Xhat) = sum_ij w_ij p_i (ln w_ij - ln r_j), r the induced marginal.
inline double mutual_information(const Channel& ch, const Distribution& p) {
  if (ch.rows() != p.size()) throw DimensionMismatch("mutual_information: channel rows != |p|");
  std::vector<double> r(ch.cols(), 0.0);
  for (std::size_t i = 0; i < ch.rows(); ++i)
    for (std::size_t j = 0; j < ch.cols(); ++j) r[j] += ch(i, j) * p[i];
  double s = 0.0;
  for (std::size_t i = 0; i < ch.rows(); ++i) {
    if (p[i] == 0.0) continue;
    for (std::size_t j = 0; j < ch.cols(); ++j) {
      double w = ch(i, j);
      if (w == 0.0) continue;
      s += w * p[i] * (std::log(w) - std::log(r[j]));
    }
  }
  return std::max(s, 0.0);
}

inline double expected_distortion(const Channel& ch, const Distribution& p, const CostMatrix& d) {
  if (ch.rows() != p.size() || d.rows() != ch.rows() || d.cols() != ch.cols())
    throw DimensionMismatch("expected_distortion: dimensions disagree");
  double s = 0.0;
  for (std::size_t i = 0; i < ch.rows(); ++i)
    for (std::size_t j = 0; j < ch.cols(); ++j) s += ch(i, j) * p[i] * d(i, j);
  return s;
}

/// Appends zero-probability symbols; the support is extended by unit steps.
inline Distribution zero_pad(const Distribution& p, std::size_t target_size) {
  if (target_size < p.size()) throw ShrinkNotAllowed("zero_pad: target smaller than input");
  std::vector<double> probs(p.probs().begin(), p.probs().end());
  std::vector<double> pts(p.support().points().begin(), p.support().points().end());
  while (probs.size() < target_size) {
    probs.push_back(0.0);
    pts.push_back(pts.back() + 1.0);
  }
  return Distribution(std::move(probs), SupportGrid(std::move(pts)));
}

inline CostMatrix hamming_matrix(std::size_t m, std::size_t n) {
  if (m == 0 || n == 0) throw InvalidArgument("hamming_matrix: empty size");
  Matrix c(m, n, 1.0);
  for (std::size_t i = 0; i < std::min(m, n); ++i) c(i, i) = 0.0;
  return CostMatrix(std::move(c));
}

inline CostMatrix squared_error_matrix(const SupportGrid& g1, const SupportGrid& g2) {
  Matrix c(g1.size(), g2.size());
  for (std::size_t i = 0; i < g1.size(); ++i)
    for (std::size_t j = 0; j < g2.size(); ++j) {
      double diff = g1[i] - g2[j];
      c(i, j) = diff * diff;
    }
  return CostMatrix(std::move(c));
}

}  // namespace rdp
