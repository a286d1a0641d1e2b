#include "fracperim/tensions.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <locale>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fracperim {

SurfaceTensionMatrix::SurfaceTensionMatrix(std::size_t m) : m_(m), entries_(m * m, 0.0) {}

SurfaceTensionMatrix::SurfaceTensionMatrix(
    std::initializer_list<std::initializer_list<double>> rows)
    : m_(rows.size()), entries_() {
  entries_.reserve(m_ * m_);
  for (const auto& row : rows) {
    if (row.size() != m_) throw std::invalid_argument("surface tension matrix must be square");
    entries_.insert(entries_.end(), row.begin(), row.end());
  }
}

SurfaceTensionMatrix SurfaceTensionMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  SurfaceTensionMatrix out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size())
      throw std::invalid_argument("surface tension matrix must be square");
    for (std::size_t j = 0; j < rows.size(); ++j) out(i, j) = rows[i][j];
  }
  return out;
}

SurfaceTensionMatrix SurfaceTensionMatrix::uniform(std::size_t m, double w) {
  SurfaceTensionMatrix out(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) out(i, j) = i == j ? 0.0 : w;
  return out;
}

void SurfaceTensionMatrix::set_pair(std::size_t i, std::size_t j, double value) {
  (*this)(i, j) = value;
  (*this)(j, i) = value;
}

double SurfaceTensionMatrix::min_off_diagonal() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m_; ++i)
    for (std::size_t j = 0; j < m_; ++j)
      if (i != j) best = std::min(best, (*this)(i, j));
  return best;
}

double SurfaceTensionMatrix::max_off_diagonal() const {
  double best = 0.0;
  for (std::size_t i = 0; i < m_; ++i)
    for (std::size_t j = 0; j < m_; ++j)
      if (i != j) best = std::max(best, (*this)(i, j));
  return best;
}

SurfaceTensionMatrix SurfaceTensionMatrix::scaled(double c) const {
  SurfaceTensionMatrix out = *this;
  for (double& v : out.entries_) v *= c;
  return out;
}

std::optional<Violation> validate(const SurfaceTensionMatrix& sigma) {
  const std::size_t m = sigma.size();
  if (m < 2) return Violation{0, 0, "need at least two chambers"};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double v = sigma(i, j);
      std::ostringstream msg;
      if (!std::isfinite(v)) {
        msg << "entry (" << i + 1 << "," << j + 1 << ") is not finite";
        return Violation{i + 1, j + 1, msg.str()};
      }
      if (i == j && v != 0.0) {
        msg << "diagonal entry (" << i + 1 << "," << j + 1 << ") is not zero";
        return Violation{i + 1, j + 1, msg.str()};
      }
      if (i != j && v != sigma(j, i)) {
        msg << "asymmetry at (" << i + 1 << "," << j + 1 << ")";
        return Violation{i + 1, j + 1, msg.str()};
      }
      if (i != j && !(v > 0.0)) {
        msg << "entry (" << i + 1 << "," << j + 1 << ") is not positive";
        return Violation{i + 1, j + 1, msg.str()};
      }
    }
  }
  return std::nullopt;
}

void require_valid(const SurfaceTensionMatrix& sigma) {
  if (auto v = validate(sigma)) throw std::invalid_argument("invalid surface tension matrix: " + v->what);
}

bool check_triangle(const SurfaceTensionMatrix& sigma) {
  const std::size_t m = sigma.size();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        if (sigma(i, j) > sigma(i, k) + sigma(k, j)) return false;
  return true;
}

SurfaceTensionMatrix relax(const SurfaceTensionMatrix& sigma) {
  require_valid(sigma);
  const std::size_t m = sigma.size();
  SurfaceTensionMatrix d = sigma;
  // Repeat the Floyd-Warshall sweep until no strict improvement remains, so the
  // result is a fixed point in floating point (relax is then exactly idempotent).
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          if (i == j) continue;
          const double via = d(i, k) + d(k, j);
          if (via < d(i, j)) {
            d(i, j) = via;
            changed = true;
          }
        }
    // Keep exact symmetry even when the two directions round differently.
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        const double v = std::min(d(i, j), d(j, i));
        if (d(i, j) != v || d(j, i) != v) {
          d.set_pair(i, j, v);
          changed = true;
        }
      }
  }
  return d;
}

std::vector<Label> relaxation_path(const SurfaceTensionMatrix& sigma, Label from, Label to) {
  const auto m = static_cast<Label>(sigma.size());
  if (from < 1 || from > m || to < 1 || to > m || from == to)
    throw std::invalid_argument("relaxation_path: endpoints must be distinct chambers");
  const SurfaceTensionMatrix dist = relax(sigma);
  const double slack = 1e-12 * sigma.max_off_diagonal();
  std::vector<Label> path{from};
  std::vector<bool> used(static_cast<std::size_t>(m) + 1, false);
  used[static_cast<std::size_t>(from)] = true;
  Label here = from;
  while (here != to) {
    Label next = 0;
    for (Label w = 1; w <= m; ++w) {
      if (used[static_cast<std::size_t>(w)]) continue;
      const double rest = w == to ? 0.0 : dist.between(w, to);
      if (sigma.between(here, w) + rest <= dist.between(here, to) + slack) {
        next = w;
        break;
      }
    }
    if (next == 0) throw std::logic_error("relaxation_path: no consistent successor");
    used[static_cast<std::size_t>(next)] = true;
    path.push_back(next);
    here = next;
  }
  return path;
}

std::array<double, 3> additive_decomposition_3(const SurfaceTensionMatrix& sigma) {
  if (sigma.size() != 3) throw std::invalid_argument("additive_decomposition_3 needs m = 3");
  require_valid(sigma);
  if (!check_triangle(sigma))
    throw std::invalid_argument("additive_decomposition_3: triangle inequality fails");
  const double s12 = sigma(0, 1), s13 = sigma(0, 2), s23 = sigma(1, 2);
  return {(s12 + s13 - s23) / 2.0, (s12 + s23 - s13) / 2.0, (s23 + s13 - s12) / 2.0};
}

Decomposition4 decomposition_4(const SurfaceTensionMatrix& sigma) {
  if (sigma.size() != 4) throw std::invalid_argument("decomposition_4 needs m = 4");
  require_valid(sigma);
  if (!check_triangle(sigma))
    throw std::invalid_argument("decomposition_4: triangle inequality fails");
  const double s12 = sigma(0, 1), s13 = sigma(0, 2), s14 = sigma(0, 3);
  const double s23 = sigma(1, 2), s24 = sigma(1, 3), s34 = sigma(2, 3);
  Decomposition4 out;
  auto& a = out.alpha_tilde;
  a[0] = 0.5 * (s12 + s13 + s14);
  a[1] = 0.5 * (s12 + s23 + s24);
  a[2] = 0.5 * (s13 + s23 + s34);
  a[3] = 0.5 * (s14 + s24 + s34);
  a[4] = 0.5 * (s12 + s34);
  a[5] = 0.5 * (s13 + s24);
  a[6] = 0.5 * (s14 + s23);
  out.alpha_star = std::max({a[4], a[5], a[6]});
  return out;
}

SurfaceTensionMatrix Decomposition4::reconstruct() const {
  const auto& a = alpha_tilde;
  SurfaceTensionMatrix s(4);
  s.set_pair(0, 1, (a[0] + a[1]) - (a[5] + a[6]));
  s.set_pair(0, 2, (a[0] + a[2]) - (a[4] + a[6]));
  s.set_pair(0, 3, (a[0] + a[3]) - (a[4] + a[5]));
  s.set_pair(1, 2, (a[1] + a[2]) - (a[4] + a[5]));
  s.set_pair(1, 3, (a[1] + a[3]) - (a[4] + a[6]));
  s.set_pair(2, 3, (a[2] + a[3]) - (a[5] + a[6]));
  return s;
}

SurfaceTensionMatrix cut_matrix(std::size_t m, std::uint32_t mask) {
  SurfaceTensionMatrix out(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const bool in_i = (mask >> i) & 1U;
      const bool in_j = (mask >> j) & 1U;
      out(i, j) = in_i != in_j ? 1.0 : 0.0;
    }
  return out;
}

SurfaceTensionMatrix CutDecomposition::reconstruct() const {
  SurfaceTensionMatrix out(m);
  for (const auto& term : terms)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const bool in_i = (term.mask >> i) & 1U;
        const bool in_j = (term.mask >> j) & 1U;
        if (in_i != in_j) out(i, j) += term.lambda;
      }
  return out;
}

namespace {

// Lawson-Hanson active set method for min |Ax - b| subject to x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index n = a.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 1e-14 * std::max(1.0, b.cwiseAbs().maxCoeff()) * static_cast<double>(a.rows());

  auto solve_passive = [&](Eigen::VectorXd& z) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
    Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = a.col(cols[k]);
    const Eigen::VectorXd zp = sub.completeOrthogonalDecomposition().solve(b);
    z.setZero(n);
    for (std::size_t k = 0; k < cols.size(); ++k) z(cols[k]) = zp(static_cast<Eigen::Index>(k));
  };

  for (int outer = 0; outer < 3 * static_cast<int>(n) + 10; ++outer) {
    const Eigen::VectorXd w = a.transpose() * (b - a * x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;

    Eigen::VectorXd z;
    for (int inner = 0; inner < 3 * static_cast<int>(n) + 10; ++inner) {
      solve_passive(z);
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) feasible = false;
      if (feasible) break;
      double step = 1.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0)
          step = std::min(step, x(j) / (x(j) - z(j)));
      x += step * (z - x);
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && x(j) <= 1e-15) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
    }
    x = z.cwiseMax(0.0);
  }
  return x;
}

}  // namespace

std::optional<CutDecomposition> cut_cone_decomposition(const SurfaceTensionMatrix& sigma,
                                                       double tolerance) {
  require_valid(sigma);
  const std::size_t m = sigma.size();
  if (m > 6) throw std::invalid_argument("cut_cone_decomposition supports m <= 6");

  // Cuts J and its complement give the same matrix: enumerate subsets of
  // {1..m-1}, i.e. the 2^(m-1)-1 distinct nonzero cut matrices.
  const std::uint32_t count = (1U << (m - 1)) - 1U;
  const auto pairs = static_cast<Eigen::Index>(m * (m - 1) / 2);
  Eigen::MatrixXd a(pairs, count);
  Eigen::VectorXd b(pairs);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j, ++row) {
      b(row) = sigma(i, j);
      for (std::uint32_t c = 0; c < count; ++c) {
        const std::uint32_t mask = c + 1;
        a(row, c) = (((mask >> i) & 1U) != ((mask >> j) & 1U)) ? 1.0 : 0.0;
      }
    }

  const Eigen::VectorXd x = nnls(a, b);
  CutDecomposition out;
  out.m = m;
  for (std::uint32_t c = 0; c < count; ++c)
    if (x(c) > 0.0) out.terms.push_back({c + 1, x(c)});
  out.residual = (a * x - b).cwiseAbs().maxCoeff();
  if (out.residual >= tolerance) return std::nullopt;
  return out;
}

SurfaceTensionMatrix read_matrix(std::istream& in) {
  in.imbue(std::locale::classic());
  long long m = 0;
  if (!(in >> m) || m < 2 || m > 4096) throw std::runtime_error("matrix file: bad chamber count");
  SurfaceTensionMatrix out(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j)
      if (!(in >> out(i, j))) throw std::runtime_error("matrix file: truncated or malformed row");
  return out;
}

void write_matrix(std::ostream& out, const SurfaceTensionMatrix& sigma) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf.precision(17);
  buf << sigma.size() << '\n';
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    for (std::size_t j = 0; j < sigma.size(); ++j) buf << (j ? " " : "") << sigma(i, j);
    buf << '\n';
  }
  out << buf.str();
}

SurfaceTensionMatrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file " + path);
  return read_matrix(in);
}

void write_cut_decomposition(std::ostream& out, const CutDecomposition& decomposition) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf.precision(17);
  for (const auto& t : decomposition.terms) buf << t.mask << ' ' << t.lambda << '\n';
  out << buf.str();
}

CutDecomposition read_cut_decomposition(std::istream& in, std::size_t m) {
  in.imbue(std::locale::classic());
  CutDecomposition out;
  out.m = m;
  std::uint32_t mask = 0;
  double lambda = 0.0;
  const std::uint32_t full = (1U << m) - 1U;
  while (in >> mask >> lambda) {
    if (mask == 0 || (mask & full) == full || (mask & ~full) != 0)
      throw std::runtime_error("cut decomposition: subset must be nonempty and proper");
    if (lambda < 0.0) throw std::runtime_error("cut decomposition: negative weight");
    out.terms.push_back({mask, lambda});
  }
  if (!in.eof()) throw std::runtime_error("cut decomposition: malformed line");
  return out;
}

}  // namespace fracperim
