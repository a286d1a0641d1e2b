#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "fracperim/grid.hpp"
#include "fracperim/quadrature.hpp"
#include "fracperim/tensions.hpp"

namespace fracperim {

struct KernelConfig {
  double s = 0.25;            // kernel exponent, 0 < s < 1/2
  int max_depth = 6;          // near-field subdivision depth
  double trunc_radius = 4.0;  // exterior integrated up to this distance from the box

  void validate(const GridSpec& spec) const;

  friend bool operator==(const KernelConfig&, const KernelConfig&) = default;
};

struct EnergyReport {
  double internal = 0.0;      // interactions inside the box
  double boundary = 0.0;      // box-to-exterior interactions, truncated
  double total = 0.0;         // internal + boundary
  double scaled_total = 0.0;  // (1 - 2s) total
  double tail_bound = 0.0;    // bound on the exterior contribution beyond trunc_radius
};

/// Volume of the unit ball in R^d.
double unit_ball_volume(int d);

/// Chamber-pair interaction sums p_kl split into the internal and boundary
/// parts. Symmetric, zero diagonal; zero-based storage.
struct PairInteractions {
  int m = 0;
  std::vector<double> internal;
  std::vector<double> boundary;

  double internal_at(Label a, Label b) const { return internal[index(a, b)]; }
  double boundary_at(Label a, Label b) const { return boundary[index(a, b)]; }
  double total_at(Label a, Label b) const { return internal_at(a, b) + boundary_at(a, b); }

 private:
  std::size_t index(Label a, Label b) const {
    return static_cast<std::size_t>(a - 1) * static_cast<std::size_t>(m) + static_cast<std::size_t>(b - 1);
  }
};

/// Precomputed cell-pair kernel table and exterior fields for one grid,
/// kernel configuration and exterior rule. Immutable after construction and
/// safe to share between threads.
class InteractionEngine {
 public:
  InteractionEngine(const GridSpec& spec, const KernelConfig& config, const ExteriorRule& exterior);

  const GridSpec& spec() const { return spec_; }
  const KernelConfig& config() const { return config_; }
  const ExteriorRule& exterior() const { return exterior_; }
  const UnitPairKernel& unit_kernel() const { return unit_; }

  /// Interaction of two distinct box cells.
  double kernel(std::size_t a, std::size_t b) const;
  /// Interaction of box cell `cell` with all ghost cells carrying `label`.
  double exterior_field(std::size_t cell, Label label) const;
  int ghost_layers() const { return ghost_; }

  PairInteractions pair_interactions(const GridPartition& partition) const;
  EnergyReport report(const PairInteractions& pairs, const SurfaceTensionMatrix& sigma) const;
  EnergyReport energy(const GridPartition& partition, const SurfaceTensionMatrix& sigma) const;

  /// P_2s of chamber `chamber` (against all other chambers) in the box.
  double perimeter(const GridPartition& partition, Label chamber) const;

  /// Per-cell fields F[cell * m + (k - 1)] = sum of interactions of `cell`
  /// with every other cell (box or ghost) labeled k.
  std::vector<double> fields(const GridPartition& partition) const;

  double tail_bound(double sigma_max) const;

 private:
  void check(const GridPartition& partition) const;
  std::size_t offset_index(std::size_t a, std::size_t b) const;
  void build_exterior();

  GridSpec spec_;
  KernelConfig config_;
  ExteriorRule exterior_;
  UnitPairKernel unit_;
  int ghost_ = 0;
  std::vector<CellCoord> coords_;
  std::vector<std::size_t> strides_;
  std::vector<double> table_;
  std::vector<Label> exterior_labels_;
  std::vector<double> exterior_fields_;  // cell-major, one slot per exterior label
};

/// I_2s(A, B) for two disjoint sets of lattice cells (cells may lie outside
/// the box). Symmetric in its arguments bit for bit.
double interaction(std::span<const CellCoord> cells_a, std::span<const CellCoord> cells_b,
                   const GridSpec& spec, const KernelConfig& config);

/// P_2s(E, box) where E is the set of cells (and exterior points) labeled `chamber`.
double perimeter_fractional(const GridPartition& partition, Label chamber, const KernelConfig& config);

EnergyReport multiphase_energy(const GridPartition& partition, const SurfaceTensionMatrix& sigma,
                               const KernelConfig& config);

/// Classical weighted perimeter: sigma_kl h^(n-1) summed over interior faces.
double perimeter_classical(const GridPartition& partition, const SurfaceTensionMatrix& sigma);

/// Geometry that can be rasterized at any resolution: a laminate along
/// `path` (a two-entry path is the plain half-space pair).
struct PartitionShape {
  LaminatePath path;
  int chambers = 2;
  int axis = 2;

  GridPartition rasterize(const GridSpec& spec) const;
};

struct GammaScanRow {
  double s = 0.0;
  int cells_per_side = 0;
  double internal = 0.0;
  double boundary = 0.0;
  double scaled_total = 0.0;
  double classical_target = 0.0;  // omega_(n-1) times the classical perimeter
  double tail_bound = 0.0;
};

std::vector<GammaScanRow> gamma_scan(const PartitionShape& shape, const SurfaceTensionMatrix& sigma,
                                     int n, double side, std::span<const double> s_values,
                                     std::span<const int> refinements, const KernelConfig& base);

void write_gamma_scan_csv(std::ostream& out, std::span<const GammaScanRow> rows);

}  // namespace fracperim
