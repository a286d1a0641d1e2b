#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "fracperim/tensions.hpp"

namespace fracperim {

/// Uniform grid on the box [-L/2, L/2]^n with N cells per side.
struct GridSpec {
  int n = 2;
  int cells_per_side = 2;
  double side = 1.0;

  double h() const { return side / cells_per_side; }
  std::size_t cell_count() const;
  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Integer cell coordinates; components beyond n are zero. Coordinates
/// outside [0, N) address ghost cells of the same lattice.
using CellCoord = std::array<int, 3>;

/// Analytic labeling of everything outside the box.
struct ExteriorRule {
  enum class Kind { none, constant, halfspace_pair };

  Kind kind = Kind::none;
  Label upper = 0;    // label where coord[axis] >= offset (or the constant label)
  Label lower = 0;    // label where coord[axis] < offset
  int axis = 0;       // 1-based
  double offset = 0.0;

  static ExteriorRule none() { return {}; }
  static ExteriorRule constant(Label label) { return {Kind::constant, label, label, 0, 0.0}; }
  static ExteriorRule halfspace_pair(Label upper, Label lower, int axis, double offset = 0.0) {
    return {Kind::halfspace_pair, upper, lower, axis, offset};
  }

  /// Label assigned to a point whose coordinate along `axis` is `coordinate`.
  Label label_at(double coordinate) const;
  /// Distinct labels the rule can produce.
  std::vector<Label> labels() const;
  std::string to_string() const;
  static ExteriorRule parse(const std::string& text);

  friend bool operator==(const ExteriorRule&, const ExteriorRule&) = default;
};

/// Chamber labels on every cell of a grid plus the exterior rule.
class GridPartition {
 public:
  GridPartition(GridSpec spec, int chambers, ExteriorRule exterior, std::vector<Label> labels);
  /// Every cell labeled `fill`.
  GridPartition(GridSpec spec, int chambers, ExteriorRule exterior, Label fill);

  const GridSpec& spec() const { return spec_; }
  int chambers() const { return chambers_; }
  const ExteriorRule& exterior() const { return exterior_; }
  const std::vector<Label>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }

  Label label(std::size_t cell) const { return labels_[cell]; }
  void set_label(std::size_t cell, Label value);

  CellCoord coord(std::size_t cell) const;
  std::size_t index(const CellCoord& c) const;
  /// Center coordinate of `cell` along 1-based `axis`.
  double center(std::size_t cell, int axis) const;
  /// Cells in the outer ring (any coordinate at 0 or N-1).
  bool on_boundary_ring(std::size_t cell) const;

  /// Copy with a different exterior rule.
  GridPartition with_exterior(ExteriorRule exterior) const;

  friend bool operator==(const GridPartition&, const GridPartition&) = default;

 private:
  GridSpec spec_;
  int chambers_ = 2;
  ExteriorRule exterior_;
  std::vector<Label> labels_;
};

struct LaminatePath {
  std::vector<Label> chambers;  // i_0, ..., i_H
  int stage = 0;                // q
};

/// Cells with center coordinate >= 0 along `axis` get `upper`, the rest
/// `lower`; exterior is the matching half-space pair.
GridPartition make_halfspace_pair(const GridSpec& spec, int chambers, Label upper, Label lower,
                                  int axis);

/// Layered recovery configuration: i_0 above a slab of width L 2^-(q+1)
/// centered on the interface, i_H below it, and H-1 equal strips
/// i_1, ..., i_{H-1} stacked downward inside the slab.
GridPartition make_laminate(const GridSpec& spec, int chambers, const LaminatePath& path, int axis);

/// Smallest N for which every laminate strip holds at least one cell layer.
int minimal_laminate_resolution(const LaminatePath& path);

/// |E_i cap box| per chamber, index 0 for chamber 1.
std::vector<double> volumes(const GridPartition& partition);

/// Per-chamber L1 distance between indicator functions.
std::vector<double> l1_distance(const GridPartition& a, const GridPartition& b);

/// Header line "n=.. N=.. L=.. m=.. exterior=.." then N^(n-1) rows of N labels.
/// Cells are listed with the first coordinate varying fastest.
void write_partition(std::ostream& out, const GridPartition& partition);
GridPartition read_partition(std::istream& in);
std::string serialize(const GridPartition& partition);
GridPartition deserialize(const std::string& bytes);
GridPartition load_partition(const std::string& path);

}  // namespace fracperim
