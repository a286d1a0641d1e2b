#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "fracperim/tensions.hpp"

namespace fracperim::testing {

/// Entries k/64 with k in [1, 64 * hi]; dyadic so that path sums are exact.
inline SurfaceTensionMatrix random_dyadic_matrix(std::size_t m, std::mt19937_64& rng, int hi = 4) {
  std::uniform_int_distribution<int> dist(1, 64 * hi);
  SurfaceTensionMatrix sigma(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) sigma.set_pair(i, j, dist(rng) / 64.0);
  return sigma;
}

inline SurfaceTensionMatrix random_matrix(std::size_t m, std::mt19937_64& rng, double lo = 0.2, double hi = 3.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  SurfaceTensionMatrix sigma(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) sigma.set_pair(i, j, dist(rng));
  return sigma;
}

/// Random matrix satisfying the triangle inequality.
inline SurfaceTensionMatrix random_metric(std::size_t m, std::mt19937_64& rng) {
  return relax(random_matrix(m, rng, 0.5, 2.0));
}

/// Cheapest simple path between every pair, by enumerating all permutations
/// of intermediate vertices.
inline SurfaceTensionMatrix brute_force_closure(const SurfaceTensionMatrix& sigma) {
  const std::size_t m = sigma.size();
  SurfaceTensionMatrix out(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      double best = std::numeric_limits<double>::infinity();
      std::vector<std::size_t> others;
      for (std::size_t k = 0; k < m; ++k)
        if (k != i && k != j) others.push_back(k);
      for (std::uint32_t subset = 0; subset < (1u << others.size()); ++subset) {
        std::vector<std::size_t> mid;
        for (std::size_t k = 0; k < others.size(); ++k)
          if (subset & (1u << k)) mid.push_back(others[k]);
        std::sort(mid.begin(), mid.end());
        do {
          double cost = 0.0;
          std::size_t at = i;
          for (std::size_t v : mid) {
            cost += sigma(at, v);
            at = v;
          }
          cost += sigma(at, j);
          best = std::min(best, cost);
        } while (std::next_permutation(mid.begin(), mid.end()));
      }
      out.set_pair(i, j, best);
    }
  return out;
}

inline double max_entry_difference(const SurfaceTensionMatrix& a, const SurfaceTensionMatrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
  return worst;
}

/// Graph metric of the complete bipartite graph K_{2,3} on chambers
/// {1,2} and {3,4,5}; it violates the pentagonal inequality and so lies
/// outside the cut cone.
inline SurfaceTensionMatrix k23_metric() {
  SurfaceTensionMatrix sigma(5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j) {
      const bool same = (i < 2) == (j < 2);
      sigma.set_pair(i, j, same ? 2.0 : 1.0);
    }
  return sigma;
}

}  // namespace fracperim::testing
