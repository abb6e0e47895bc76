// Binary source, Hamming distortion, total-variation perception: solver rate
// against the closed form over a few budgets.

#include <cstdio>

#include "rdp/rdp.hpp"

int main() {
  const double p = 0.1;
  auto src = rdp::Distribution::bernoulli(p);
  auto d = rdp::hamming_matrix(2, 2);
  std::printf("%6s %6s %12s %12s %6s\n", "D", "P", "rate", "closed_form", "iters");
  for (double P : {0.02, 0.06, 1.0})
    for (double D : {0.02, 0.05, 0.08}) {
      rdp::RdpProblem prob{src, d, std::nullopt, D, P, 0.01};
      auto res = rdp::solve_rdp_tv(prob);
      std::printf("%6.2f %6.2f %12.8f %12.8f %6d\n", D, P, res.rate, rdp::binary_rdp_closed_form(p, D, P),
                  res.iterations);
    }
}
