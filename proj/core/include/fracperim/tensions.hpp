#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fracperim {

/// Chamber label. Chambers are numbered 1..m everywhere in the public API.
using Label = int;

/// Symmetric m x m matrix of interface weights with zero diagonal.
///
/// Element access through operator() is zero-based; `between(a, b)` takes
/// chamber labels (1-based). Construction does not validate: call
/// `validate()` (or any operation that requires a valid matrix) to check
/// symmetry, zero diagonal and positivity.
class SurfaceTensionMatrix {
 public:
  SurfaceTensionMatrix() = default;
  explicit SurfaceTensionMatrix(std::size_t m);
  SurfaceTensionMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static SurfaceTensionMatrix from_rows(const std::vector<std::vector<double>>& rows);
  /// Matrix with sigma_ij = w for every i != j.
  static SurfaceTensionMatrix uniform(std::size_t m, double w);

  std::size_t size() const { return m_; }

  double operator()(std::size_t i, std::size_t j) const { return entries_[i * m_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return entries_[i * m_ + j]; }

  double between(Label a, Label b) const {
    return entries_[static_cast<std::size_t>(a - 1) * m_ + static_cast<std::size_t>(b - 1)];
  }

  /// Sets entries (i, j) and (j, i), zero-based.
  void set_pair(std::size_t i, std::size_t j, double value);

  double min_off_diagonal() const;
  double max_off_diagonal() const;

  /// Entry-wise product with a scalar.
  SurfaceTensionMatrix scaled(double c) const;

  const std::vector<double>& data() const { return entries_; }

  friend bool operator==(const SurfaceTensionMatrix&, const SurfaceTensionMatrix&) = default;

 private:
  std::size_t m_ = 0;
  std::vector<double> entries_;
};

struct Violation {
  std::size_t i = 0;  // 1-based
  std::size_t j = 0;  // 1-based
  std::string what;
};

/// Returns nullopt when the matrix is admissible, else the first failing entry
/// in row-major order.
std::optional<Violation> validate(const SurfaceTensionMatrix& sigma);

/// Throws std::invalid_argument with the violation text when invalid.
void require_valid(const SurfaceTensionMatrix& sigma);

/// True iff sigma_ij <= sigma_ik + sigma_kj for every triple.
bool check_triangle(const SurfaceTensionMatrix& sigma);

/// Largest matrix below sigma satisfying the triangle inequality: the
/// all-pairs shortest-path closure over the complete graph weighted by sigma.
SurfaceTensionMatrix relax(const SurfaceTensionMatrix& sigma);

/// A cheapest chamber path from `from` to `to` under sigma (vertices listed
/// from `from` to `to`, labels 1-based). Among equal-cost paths the
/// lexicographically smallest vertex sequence is returned.
std::vector<Label> relaxation_path(const SurfaceTensionMatrix& sigma, Label from, Label to);

/// Unique alpha with sigma_ij = alpha_i + alpha_j (m = 3, triangle inequality).
std::array<double, 3> additive_decomposition_3(const SurfaceTensionMatrix& sigma);

struct Decomposition4 {
  /// alpha_tilde[0..3] are the per-chamber weights, [4..6] the pair-union weights.
  std::array<double, 7> alpha_tilde{};
  double alpha_star = 0.0;

  /// sigma rebuilt from the seven coefficients.
  SurfaceTensionMatrix reconstruct() const;
};

Decomposition4 decomposition_4(const SurfaceTensionMatrix& sigma);

/// Cut semimetric delta^J: delta_ij = 1 iff exactly one of i, j lies in J.
/// Bit k-1 of `mask` marks chamber k.
struct CutTerm {
  std::uint32_t mask = 0;
  double lambda = 0.0;
};

struct CutDecomposition {
  std::size_t m = 0;
  std::vector<CutTerm> terms;
  double residual = 0.0;  // max-entry reconstruction error

  SurfaceTensionMatrix reconstruct() const;
};

/// Cut matrix for subset `mask` of {1..m}.
SurfaceTensionMatrix cut_matrix(std::size_t m, std::uint32_t mask);

/// Nonnegative combination of cut matrices reproducing sigma to 1e-9, or
/// nullopt when none exists. Only m <= 6 is supported.
std::optional<CutDecomposition> cut_cone_decomposition(const SurfaceTensionMatrix& sigma,
                                                       double tolerance = 1e-9);

// Text formats: "m" on the first line followed by m rows; decompositions are
// one "mask lambda" pair per line.
SurfaceTensionMatrix read_matrix(std::istream& in);
void write_matrix(std::ostream& out, const SurfaceTensionMatrix& sigma);
SurfaceTensionMatrix load_matrix(const std::string& path);
void write_cut_decomposition(std::ostream& out, const CutDecomposition& decomposition);
CutDecomposition read_cut_decomposition(std::istream& in, std::size_t m);

}  // namespace fracperim
