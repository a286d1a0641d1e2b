#include "fracperim/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fracperim {

namespace {

constexpr int kGaussOrder = 8;

int squared_norm(const CellCoord& o) { return o[0] * o[0] + o[1] * o[1] + o[2] * o[2]; }

}  // namespace

void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(static_cast<std::size_t>(order), 0.0);
  weights.assign(static_cast<std::size_t>(order), 0.0);
  for (int i = 0; i < order; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[static_cast<std::size_t>(i)] = x;
    weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

UnitPairKernel::UnitPairKernel(int n, double s, int depth)
    : n_(n), s_(s), depth_(depth), alpha_(n + 2.0 * s), child_scale_(std::exp2(-(n - 2.0 * s))) {
  if (n != 2 && n != 3) throw std::invalid_argument("kernel dimension must be 2 or 3");
  if (!(s > 0.0 && s < 0.5)) throw std::invalid_argument("kernel exponent s must lie in (0, 1/2)");
  if (depth < 0) throw std::invalid_argument("subdivision depth must be >= 0");

  // Difference-variable form: the overlap weight prod(1 - |t_k|) has a kink at
  // t_k = 0, so each axis uses Gauss rules on [-1, 0] and [0, 1] separately.
  std::vector<double> x, w;
  gauss_legendre(kGaussOrder, x, w);
  for (int half = 0; half < 2; ++half)
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double t = half == 0 ? -0.5 + 0.5 * x[i] : 0.5 + 0.5 * x[i];
      nodes_.push_back(t);
      weights_.push_back(0.5 * w[i] * (1.0 - std::abs(t)));
    }

  solve_touching();

  const int reach = 2 * n;  // |o| < 2 sqrt(n) implies every |o_k| < 2n
  CellCoord o{0, 0, 0};
  for (o[2] = 0; o[2] <= (n == 3 ? reach : 0); ++o[2])
    for (o[1] = 0; o[1] <= reach; ++o[1])
      for (o[0] = 0; o[0] <= reach; ++o[0]) {
        if (canonical(o) != o || squared_norm(o) == 0 || is_far(o)) continue;
        near_[o] = subdivided(o, depth_);
      }
  memo_.clear();
}

UnitPairKernel::Key UnitPairKernel::canonical(const CellCoord& offset) const {
  Key k{std::abs(offset[0]), std::abs(offset[1]), n_ == 3 ? std::abs(offset[2]) : 0};
  std::sort(k.begin(), k.begin() + n_);
  return k;
}

bool UnitPairKernel::is_far(const CellCoord& offset) const {
  return squared_norm(offset) >= 4 * n_;
}

bool UnitPairKernel::is_touching(const CellCoord& offset) const {
  if (squared_norm(offset) == 0) return false;
  for (int k = 0; k < n_; ++k)
    if (std::abs(offset[static_cast<std::size_t>(k)]) > 1) return false;
  return true;
}

double UnitPairKernel::leaf(const Key& key) const {
  const double half_alpha = -alpha_ / 2.0;
  const std::size_t q = nodes_.size();
  double sum = 0.0;
  if (n_ == 2) {
    for (std::size_t i = 0; i < q; ++i) {
      const double zx = key[0] + nodes_[i];
      double row = 0.0;
      for (std::size_t j = 0; j < q; ++j) {
        const double zy = key[1] + nodes_[j];
        row += weights_[j] * std::pow(zx * zx + zy * zy, half_alpha);
      }
      sum += weights_[i] * row;
    }
    return sum;
  }
  for (std::size_t i = 0; i < q; ++i) {
    const double zx = key[0] + nodes_[i];
    double plane = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
      const double zy = key[1] + nodes_[j];
      double row = 0.0;
      for (std::size_t k = 0; k < q; ++k) {
        const double zz = key[2] + nodes_[k];
        row += weights_[k] * std::pow(zx * zx + zy * zy + zz * zz, half_alpha);
      }
      plane += weights_[j] * row;
    }
    sum += weights_[i] * plane;
  }
  return sum;
}

double UnitPairKernel::subdivided(const Key& key, int depth) const {
  if (is_touching(key)) return touching_.at(key);
  if (depth == 0 || is_far(key)) return leaf(key);
  const auto memo_key = std::make_pair(key, depth);
  if (auto it = memo_.find(memo_key); it != memo_.end()) return it->second;

  double sum = 0.0;
  const int corners = 1 << n_;
  for (int a = 0; a < corners; ++a)
    for (int b = 0; b < corners; ++b) {
      CellCoord child{0, 0, 0};
      for (int k = 0; k < n_; ++k)
        child[static_cast<std::size_t>(k)] =
            2 * key[static_cast<std::size_t>(k)] + ((b >> k) & 1) - ((a >> k) & 1);
      sum += subdivided(canonical(child), depth - 1);
    }
  const double value = child_scale_ * sum;
  memo_.emplace(memo_key, value);
  return value;
}

void UnitPairKernel::solve_touching() {
  // Unknowns: canonical touching offsets (0..0,1..1) with k ones, k = 1..n.
  std::vector<Key> unknowns;
  for (int ones = 1; ones <= n_; ++ones) {
    Key k{0, 0, 0};
    for (int c = n_ - ones; c < n_; ++c) k[static_cast<std::size_t>(c)] = 1;
    unknowns.push_back(k);
  }
  const auto count = static_cast<Eigen::Index>(unknowns.size());
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(count, count);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(count);

  const int corners = 1 << n_;
  for (Eigen::Index row = 0; row < count; ++row) {
    const Key& t = unknowns[static_cast<std::size_t>(row)];
    for (int a = 0; a < corners; ++a)
      for (int b = 0; b < corners; ++b) {
        CellCoord child{0, 0, 0};
        for (int k = 0; k < n_; ++k)
          child[static_cast<std::size_t>(k)] =
              2 * t[static_cast<std::size_t>(k)] + ((b >> k) & 1) - ((a >> k) & 1);
        const Key ck = canonical(child);
        if (squared_norm(ck) == 0) throw std::logic_error("touching cubes cannot share a child");
        if (is_touching(ck)) {
          const auto col = std::find(unknowns.begin(), unknowns.end(), ck) - unknowns.begin();
          system(row, col) -= child_scale_;
        } else {
          rhs(row) += child_scale_ * subdivided(ck, depth_);
        }
      }
  }
  const Eigen::VectorXd values = system.partialPivLu().solve(rhs);
  for (Eigen::Index i = 0; i < count; ++i) touching_[unknowns[static_cast<std::size_t>(i)]] = values(i);
}

double UnitPairKernel::accurate(const CellCoord& offset) const {
  const Key key = canonical(offset);
  if (squared_norm(key) == 0) throw std::invalid_argument("coincident cells have infinite interaction");
  if (auto it = near_.find(key); it != near_.end()) return it->second;
  return is_far(key) ? leaf(key) : subdivided(key, depth_);
}

double UnitPairKernel::operator()(const CellCoord& offset) const {
  const Key key = canonical(offset);
  const int r2 = squared_norm(key);
  if (r2 == 0) throw std::invalid_argument("coincident cells have infinite interaction");
  if (r2 >= 4 * n_) return std::pow(static_cast<double>(r2), -alpha_ / 2.0);
  return near_.at(key);
}

}  // namespace fracperim
