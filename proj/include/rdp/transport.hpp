#pragma once

// Exact discrete optimal transport by the transportation simplex method
// (northwest-corner start, MODI potentials, Dantzig pricing).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "rdp/errors.hpp"
#include "rdp/prob.hpp"

namespace rdp {

struct TransportSolution {
  double value = 0.0;
  Coupling plan;
};

namespace detail {

class TransportSimplex {
 public:
  TransportSimplex(std::vector<double> supply, std::vector<double> demand, const CostMatrix& c)
      : m_(supply.size()), n_(demand.size()), c_(c) {
    northwest_corner(std::move(supply), std::move(demand));
  }

  void run() {
    const double scale = std::max(1.0, c_.max_entry());
    const double tol = 1e-11 * scale;
    // Consecutive zero-length pivots tolerated before pricing switches to the
    // first eligible cell, which cannot cycle.
    const std::size_t degenerate_limit = 8 * (m_ + n_);
    std::size_t degenerate_run = 0;
    const std::size_t max_pivots = 200 * (m_ + n_) * std::max<std::size_t>(1, std::min(m_, n_));
    for (std::size_t pivot = 0; pivot < max_pivots; ++pivot) {
      build_tree();
      bool bland = degenerate_run > degenerate_limit;
      std::size_t ei = 0, ej = 0;
      double best = -tol;
      bool found = false;
      for (std::size_t i = 0; i < m_ && !(bland && found); ++i)
        for (std::size_t j = 0; j < n_; ++j) {
          double rc = c_(i, j) - pot_[i] - pot_[m_ + j];
          if (rc < best) {
            best = rc;
            ei = i;
            ej = j;
            found = true;
            if (bland) break;
          }
        }
      if (!found) return;
      double theta = pivot_in(ei, ej);
      degenerate_run = theta > 0.0 ? 0 : degenerate_run + 1;
    }
    throw Error("transport simplex did not terminate");
  }

  TransportSolution solution() const {
    Matrix pi(m_, n_);
    double value = 0.0;
    for (const auto& cell : cells_) {
      pi(cell.i, cell.j) += cell.x;
      value += cell.x * c_(cell.i, cell.j);
    }
    return {value, Coupling(std::move(pi))};
  }

 private:
  struct Cell {
    std::size_t i, j;
    double x;
  };

  void northwest_corner(std::vector<double> a, std::vector<double> b) {
    std::size_t i = 0, j = 0;
    while (true) {
      double x = std::min(a[i], b[j]);
      cells_.push_back({i, j, x});
      a[i] -= x;
      b[j] -= x;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (i == m_ - 1) ++j;
      else if (j == n_ - 1) ++i;
      else if (a[i] <= b[j]) ++i;
      else ++j;
    }
  }

  // Spanning tree of basic cells rooted at row 0: potentials, parents, depths.
  void build_tree() {
    const std::size_t nodes = m_ + n_;
    adj_.assign(nodes, {});
    for (std::size_t k = 0; k < cells_.size(); ++k) {
      adj_[cells_[k].i].push_back(k);
      adj_[m_ + cells_[k].j].push_back(k);
    }
    pot_.assign(nodes, 0.0);
    parent_cell_.assign(nodes, npos);
    depth_.assign(nodes, npos);
    std::vector<std::size_t> queue{0};
    depth_[0] = 0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      std::size_t u = queue[q];
      for (std::size_t k : adj_[u]) {
        std::size_t v = other_end(k, u);
        if (depth_[v] != npos) continue;
        depth_[v] = depth_[u] + 1;
        parent_cell_[v] = k;
        pot_[v] = c_(cells_[k].i, cells_[k].j) - pot_[u];
        queue.push_back(v);
      }
    }
  }

  std::size_t other_end(std::size_t k, std::size_t node) const {
    std::size_t row = cells_[k].i, col = m_ + cells_[k].j;
    return node == row ? col : row;
  }

  // Enters (ei, ej), returns the step length.
  double pivot_in(std::size_t ei, std::size_t ej) {
    std::size_t a = ei, b = m_ + ej;
    std::vector<std::size_t> from_a, from_b;
    while (a != b) {
      if (depth_[a] >= depth_[b]) {
        from_a.push_back(parent_cell_[a]);
        a = other_end(parent_cell_[a], a);
      } else {
        from_b.push_back(parent_cell_[b]);
        b = other_end(parent_cell_[b], b);
      }
    }
    // Cycle order from the entering column back to the entering row; the
    // first cell of that path loses mass, then signs alternate.
    std::vector<std::size_t> path = from_b;
    path.insert(path.end(), from_a.rbegin(), from_a.rend());
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = npos;
    for (std::size_t t = 0; t < path.size(); t += 2) {
      const Cell& cell = cells_[path[t]];
      bool better = leave == npos || cell.x < theta ||
                    (cell.x == theta && (cell.i < cells_[leave].i ||
                                         (cell.i == cells_[leave].i && cell.j < cells_[leave].j)));
      if (better) {
        theta = cell.x;
        leave = path[t];
      }
    }
    for (std::size_t t = 0; t < path.size(); ++t) {
      if (t % 2 == 0) cells_[path[t]].x -= theta;
      else cells_[path[t]].x += theta;
    }
    cells_[leave] = {ei, ej, theta};
    return theta;
  }

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  std::size_t m_, n_;
  const CostMatrix& c_;
  std::vector<Cell> cells_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<double> pot_;
  std::vector<std::size_t> parent_cell_;
  std::vector<std::size_t> depth_;
};

}  // namespace detail

/// Optimal plan and value of min sum pi_ij c_ij over couplings of (a, b).
/// Both marginals must carry the same total mass within 1e-9.
inline TransportSolution solve_transport(std::span<const double> a, std::span<const double> b,
                                         const CostMatrix& c) {
  if (a.size() != c.rows() || b.size() != c.cols())
    throw DimensionMismatch("solve_transport: marginals do not match cost matrix");
  double sa = 0.0, sb = 0.0;
  for (double v : a) {
    if (!(v >= 0.0)) throw InvalidArgument("solve_transport: negative supply");
    sa += v;
  }
  for (double v : b) {
    if (!(v >= 0.0)) throw InvalidArgument("solve_transport: negative demand");
    sb += v;
  }
  if (std::abs(sa - sb) > 1e-9) throw InfeasibleMass("solve_transport: marginal masses differ");
  std::vector<double> supply(a.begin(), a.end());
  std::vector<double> demand(b.begin(), b.end());
  // Absorb rounding-level imbalance in the largest demand so the tree closes.
  auto big = std::max_element(demand.begin(), demand.end());
  *big = std::max(0.0, *big + (sa - sb));
  detail::TransportSimplex simplex(std::move(supply), std::move(demand), c);
  simplex.run();
  return simplex.solution();
}

inline TransportSolution solve_transport(const Distribution& p, const Distribution& r,
                                         const CostMatrix& c) {
  return solve_transport(p.probs(), r.probs(), c);
}

inline double wasserstein(const Distribution& p, const Distribution& r, const CostMatrix& c) {
  return solve_transport(p, r, c).value;
}

}  // namespace rdp
