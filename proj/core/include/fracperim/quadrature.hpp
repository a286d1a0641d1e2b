#pragma once

#include <map>
#include <vector>

#include "fracperim/grid.hpp"

namespace fracperim {

/// Interaction integrals of |x - y|^-(n+2s) between two unit cubes whose
/// lower corners differ by an integer offset.
///
/// Pairs at center distance >= 2 sqrt(n) use the midpoint value
/// |offset|^-(n+2s). Nearer pairs are subdivided 2^n x 2^n at a time for up
/// to `depth` levels, with tensor Gauss-Legendre leaves on the
/// difference-variable form of the integral. Touching pairs (offset in
/// {-1,0,1}^n) are not integrable by subdivision alone; their values solve the
/// exact self-similarity relation obtained from one subdivision step, since
/// halving both cubes scales the kernel integral by 2^-(n-2s).
class UnitPairKernel {
 public:
  UnitPairKernel(int n, double s, int depth);

  int dimension() const { return n_; }
  double s() const { return s_; }
  int depth() const { return depth_; }

  /// Value used for grid assembly; offset must be nonzero.
  double operator()(const CellCoord& offset) const;

  /// Quadrature value regardless of distance (no midpoint shortcut).
  double accurate(const CellCoord& offset) const;

  bool is_far(const CellCoord& offset) const;
  bool is_touching(const CellCoord& offset) const;

 private:
  using Key = CellCoord;
  Key canonical(const CellCoord& offset) const;
  double leaf(const Key& key) const;
  double subdivided(const Key& key, int depth) const;
  void solve_touching();

  int n_;
  double s_;
  int depth_;
  double alpha_;
  double child_scale_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::map<Key, double> touching_;
  mutable std::map<std::pair<Key, int>, double> memo_;
  std::map<Key, double> near_;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace fracperim
