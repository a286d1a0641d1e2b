#include "fracperim/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>

#include "fracperim/format.hpp"
#include "fracperim/parallel.hpp"

namespace fracperim {

namespace {

constexpr std::size_t kBlockCells = 64;

std::size_t block_count(std::size_t cells) { return (cells + kBlockCells - 1) / kBlockCells; }

// Summed-area table of the kernel over signed offsets [-r, r]^n, kept in
// extended precision because box sums are differences of large prefix sums.
class OffsetTable {
 public:
  OffsetTable(int n, int r) : n_(n), r_(r), extent_(2 * r + 2) {
    std::size_t size = 1;
    for (int d = 0; d < n; ++d) size *= static_cast<std::size_t>(extent_);
    data_.assign(size, 0.0L);
  }

  std::size_t index(const CellCoord& i) const {
    std::size_t idx = 0;
    for (int d = n_ - 1; d >= 0; --d) idx = idx * static_cast<std::size_t>(extent_) + static_cast<std::size_t>(i[static_cast<std::size_t>(d)]);
    return idx;
  }

  template <class F>
  void fill(F&& kernel) {
    CellCoord i{0, 0, 0};
    const int hi3 = n_ == 3 ? extent_ - 1 : 0;
    for (i[2] = n_ == 3 ? 1 : 0; i[2] <= hi3; ++i[2])
      for (i[1] = 1; i[1] < extent_; ++i[1])
        for (i[0] = 1; i[0] < extent_; ++i[0]) {
          const CellCoord offset{i[0] - 1 - r_, i[1] - 1 - r_, n_ == 3 ? i[2] - 1 - r_ : 0};
          data_[index(i)] = kernel(offset);
        }
    const std::size_t e = static_cast<std::size_t>(extent_);
    std::size_t stride = 1;
    for (int d = 0; d < n_; ++d) {
      for (std::size_t idx = 0; idx < data_.size(); ++idx)
        if ((idx / stride) % e != 0) data_[idx] += data_[idx - stride];
      stride *= e;
    }
  }

  // Sum of kernel values over signed offsets lo..hi (inclusive) per axis.
  long double box(const CellCoord& lo, const CellCoord& hi) const {
    for (int d = 0; d < n_; ++d)
      if (lo[static_cast<std::size_t>(d)] > hi[static_cast<std::size_t>(d)]) return 0.0L;
    long double sum = 0.0L;
    for (int corner = 0; corner < (1 << n_); ++corner) {
      CellCoord i{0, 0, 0};
      int lows = 0;
      for (int d = 0; d < n_; ++d) {
        const auto k = static_cast<std::size_t>(d);
        if (corner & (1 << d)) {
          i[k] = hi[k] + r_ + 1;
        } else {
          i[k] = lo[k] + r_;
          ++lows;
        }
      }
      const long double v = data_[index(i)];
      sum += (lows % 2 == 0) ? v : -v;
    }
    return sum;
  }

 private:
  int n_;
  int r_;
  int extent_;
  std::vector<long double> data_;
};

int checked_dimension(const GridSpec& spec, const KernelConfig& config) {
  spec.validate();
  config.validate(spec);
  return spec.n;
}

}  // namespace

void KernelConfig::validate(const GridSpec& spec) const {
  if (!(s > 0.0 && s < 0.5)) throw std::invalid_argument("kernel exponent s must lie in (0, 1/2), got " + format_number(s));
  if (max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
  if (!(trunc_radius >= spec.side))
    throw std::invalid_argument("trunc_radius must be at least the box side " + format_number(spec.side));
}

double unit_ball_volume(int d) {
  if (d < 0) throw std::invalid_argument("negative dimension");
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

InteractionEngine::InteractionEngine(const GridSpec& spec, const KernelConfig& config, const ExteriorRule& exterior)
    : spec_(spec), config_(config), exterior_(exterior), unit_(checked_dimension(spec, config), config.s, config.max_depth) {
  const int n = spec_.n;
  const int N = spec_.cells_per_side;
  const std::size_t cells = spec_.cell_count();
  coords_.resize(cells);
  {
    GridPartition probe(spec_, 2, ExteriorRule::none(), 1);
    for (std::size_t c = 0; c < cells; ++c) coords_[c] = probe.coord(c);
  }
  strides_.assign(3, 0);
  std::size_t stride = 1;
  for (int d = 0; d < n; ++d) {
    strides_[static_cast<std::size_t>(d)] = stride;
    stride *= static_cast<std::size_t>(N);
  }
  const double scale = std::pow(spec_.h(), n - 2.0 * config_.s);
  table_.assign(stride, 0.0);
  for (std::size_t idx = 1; idx < stride; ++idx) {
    CellCoord o{0, 0, 0};
    std::size_t rest = idx;
    for (int d = 0; d < n; ++d) {
      o[static_cast<std::size_t>(d)] = static_cast<int>(rest % static_cast<std::size_t>(N));
      rest /= static_cast<std::size_t>(N);
    }
    table_[idx] = scale * unit_(o);
  }
  build_exterior();
}

void InteractionEngine::build_exterior() {
  exterior_labels_ = exterior_.labels();
  if (exterior_labels_.empty()) return;
  const int n = spec_.n;
  const int N = spec_.cells_per_side;
  const double h = spec_.h();
  ghost_ = static_cast<int>(std::ceil(config_.trunc_radius / h - 1e-9));
  const int reach = N - 1 + ghost_;
  const double scale = std::pow(h, n - 2.0 * config_.s);

  OffsetTable sat(n, reach);
  const int N1 = N;
  sat.fill([&](const CellCoord& o) -> long double {
    bool inside = true;
    for (int d = 0; d < n; ++d) inside = inside && std::abs(o[static_cast<std::size_t>(d)]) < N1;
    if (inside) {
      std::size_t idx = 0;
      for (int d = 0; d < n; ++d) idx += static_cast<std::size_t>(std::abs(o[static_cast<std::size_t>(d)])) * strides_[static_cast<std::size_t>(d)];
      return table_[idx];
    }
    return scale * unit_(o);
  });

  // Each exterior label occupies an axis-aligned box of ghost/cell indices in
  // the padded lattice [-G, N-1+G]^n; ghosts are labeled by their centers.
  struct Region {
    Label label;
    CellCoord lo, hi;
  };
  std::vector<Region> regions;
  CellCoord full_lo{0, 0, 0}, full_hi{0, 0, 0};
  for (int d = 0; d < n; ++d) {
    full_lo[static_cast<std::size_t>(d)] = -ghost_;
    full_hi[static_cast<std::size_t>(d)] = N - 1 + ghost_;
  }
  if (exterior_.kind == ExteriorRule::Kind::constant) {
    regions.push_back({exterior_.upper, full_lo, full_hi});
  } else {
    const auto axis = static_cast<std::size_t>(exterior_.axis - 1);
    int first_upper = N + ghost_;
    for (int k = -ghost_; k <= N - 1 + ghost_; ++k) {
      const double center = -spec_.side / 2.0 + (k + 0.5) * h;
      if (exterior_.label_at(center) == exterior_.upper) {
        first_upper = k;
        break;
      }
    }
    Region up{exterior_.upper, full_lo, full_hi};
    Region down{exterior_.lower, full_lo, full_hi};
    up.lo[axis] = first_upper;
    down.hi[axis] = first_upper - 1;
    regions.push_back(up);
    regions.push_back(down);
  }

  const std::size_t cells = coords_.size();
  const std::size_t E = exterior_labels_.size();
  exterior_fields_.assign(cells * E, 0.0);
  parallel_for_blocks(block_count(cells), [&](std::size_t block) {
    const std::size_t end = std::min(cells, (block + 1) * kBlockCells);
    for (std::size_t c = block * kBlockCells; c < end; ++c) {
      const CellCoord& a = coords_[c];
      for (const Region& region : regions) {
        CellCoord lo{0, 0, 0}, hi{0, 0, 0}, ilo{0, 0, 0}, ihi{0, 0, 0};
        for (int d = 0; d < n; ++d) {
          const auto k = static_cast<std::size_t>(d);
          lo[k] = region.lo[k] - a[k];
          hi[k] = region.hi[k] - a[k];
          ilo[k] = std::max(region.lo[k], 0) - a[k];
          ihi[k] = std::min(region.hi[k], N - 1) - a[k];
        }
        const long double value = sat.box(lo, hi) - sat.box(ilo, ihi);
        const auto slot = static_cast<std::size_t>(
            std::find(exterior_labels_.begin(), exterior_labels_.end(), region.label) - exterior_labels_.begin());
        exterior_fields_[c * E + slot] += static_cast<double>(value);
      }
    }
  });
}

std::size_t InteractionEngine::offset_index(std::size_t a, std::size_t b) const {
  const CellCoord& ca = coords_[a];
  const CellCoord& cb = coords_[b];
  std::size_t idx = 0;
  for (int d = 0; d < spec_.n; ++d) {
    const auto k = static_cast<std::size_t>(d);
    idx += static_cast<std::size_t>(std::abs(ca[k] - cb[k])) * strides_[k];
  }
  return idx;
}

double InteractionEngine::kernel(std::size_t a, std::size_t b) const {
  if (a >= coords_.size() || b >= coords_.size()) throw std::out_of_range("cell index out of range");
  if (a == b) throw std::invalid_argument("a cell does not interact with itself");
  return table_[offset_index(a, b)];
}

double InteractionEngine::exterior_field(std::size_t cell, Label label) const {
  if (cell >= coords_.size()) throw std::out_of_range("cell index out of range");
  const auto it = std::find(exterior_labels_.begin(), exterior_labels_.end(), label);
  if (it == exterior_labels_.end()) return 0.0;
  const auto slot = static_cast<std::size_t>(it - exterior_labels_.begin());
  return exterior_fields_[cell * exterior_labels_.size() + slot];
}

void InteractionEngine::check(const GridPartition& partition) const {
  if (!(partition.spec() == spec_)) throw std::invalid_argument("partition grid does not match the interaction engine");
  if (!(partition.exterior() == exterior_))
    throw std::invalid_argument("partition exterior rule " + partition.exterior().to_string() +
                                " does not match the interaction engine (" + exterior_.to_string() + ")");
}

PairInteractions InteractionEngine::pair_interactions(const GridPartition& partition) const {
  check(partition);
  const int m = partition.chambers();
  for (Label e : exterior_labels_)
    if (e > m) throw std::invalid_argument("exterior label exceeds the chamber count");
  const std::size_t cells = coords_.size();
  const std::size_t slots = static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
  const std::size_t blocks = block_count(cells);
  const std::size_t E = exterior_labels_.size();
  std::vector<double> internal(blocks * slots, 0.0), boundary(blocks * slots, 0.0);
  const auto& labels = partition.labels();

  parallel_for_blocks(blocks, [&](std::size_t block) {
    double* in = internal.data() + block * slots;
    double* bd = boundary.data() + block * slots;
    const std::size_t end = std::min(cells, (block + 1) * kBlockCells);
    for (std::size_t a = block * kBlockCells; a < end; ++a) {
      const Label la = labels[a];
      for (std::size_t b = a + 1; b < cells; ++b) {
        const Label lb = labels[b];
        if (la == lb) continue;
        const auto lo = static_cast<std::size_t>(std::min(la, lb) - 1);
        const auto hi = static_cast<std::size_t>(std::max(la, lb) - 1);
        in[lo * static_cast<std::size_t>(m) + hi] += table_[offset_index(a, b)];
      }
      for (std::size_t e = 0; e < E; ++e) {
        const Label le = exterior_labels_[e];
        if (le == la) continue;
        const auto lo = static_cast<std::size_t>(std::min(la, le) - 1);
        const auto hi = static_cast<std::size_t>(std::max(la, le) - 1);
        bd[lo * static_cast<std::size_t>(m) + hi] += exterior_fields_[a * E + e];
      }
    }
  });

  PairInteractions result;
  result.m = m;
  result.internal.assign(slots, 0.0);
  result.boundary.assign(slots, 0.0);
  for (std::size_t block = 0; block < blocks; ++block)
    for (std::size_t k = 0; k < slots; ++k) {
      result.internal[k] += internal[block * slots + k];
      result.boundary[k] += boundary[block * slots + k];
    }
  for (std::size_t i = 0; i < static_cast<std::size_t>(m); ++i)
    for (std::size_t j = i + 1; j < static_cast<std::size_t>(m); ++j) {
      result.internal[j * static_cast<std::size_t>(m) + i] = result.internal[i * static_cast<std::size_t>(m) + j];
      result.boundary[j * static_cast<std::size_t>(m) + i] = result.boundary[i * static_cast<std::size_t>(m) + j];
    }
  return result;
}

EnergyReport InteractionEngine::report(const PairInteractions& pairs, const SurfaceTensionMatrix& sigma) const {
  if (static_cast<int>(sigma.size()) != pairs.m)
    throw std::invalid_argument("surface tension matrix has " + std::to_string(sigma.size()) + " chambers, partition has " +
                                std::to_string(pairs.m));
  EnergyReport r;
  for (Label i = 1; i <= pairs.m; ++i)
    for (Label j = i + 1; j <= pairs.m; ++j) {
      r.internal += sigma.between(i, j) * pairs.internal_at(i, j);
      r.boundary += sigma.between(i, j) * pairs.boundary_at(i, j);
    }
  r.total = r.internal + r.boundary;
  r.scaled_total = (1.0 - 2.0 * config_.s) * r.total;
  r.tail_bound = exterior_labels_.empty() ? 0.0 : tail_bound(sigma.max_off_diagonal());
  return r;
}

EnergyReport InteractionEngine::energy(const GridPartition& partition, const SurfaceTensionMatrix& sigma) const {
  if (static_cast<int>(sigma.size()) != partition.chambers())
    throw std::invalid_argument("surface tension matrix has " + std::to_string(sigma.size()) + " chambers, partition has " +
                                std::to_string(partition.chambers()));
  return report(pair_interactions(partition), sigma);
}

double InteractionEngine::perimeter(const GridPartition& partition, Label chamber) const {
  check(partition);
  if (chamber < 1 || chamber > partition.chambers()) throw std::out_of_range("chamber index out of range");
  const std::size_t cells = coords_.size();
  const std::size_t blocks = block_count(cells);
  const std::size_t E = exterior_labels_.size();
  std::vector<double> internal(blocks, 0.0), boundary(blocks, 0.0);
  const auto& labels = partition.labels();

  parallel_for_blocks(blocks, [&](std::size_t block) {
    double in = 0.0, bd = 0.0;
    const std::size_t end = std::min(cells, (block + 1) * kBlockCells);
    for (std::size_t a = block * kBlockCells; a < end; ++a) {
      const bool ina = labels[a] == chamber;
      for (std::size_t b = a + 1; b < cells; ++b)
        if ((labels[b] == chamber) != ina) in += table_[offset_index(a, b)];
      for (std::size_t e = 0; e < E; ++e)
        if ((exterior_labels_[e] == chamber) != ina) bd += exterior_fields_[a * E + e];
    }
    internal[block] = in;
    boundary[block] = bd;
  });

  double in = 0.0, bd = 0.0;
  for (std::size_t block = 0; block < blocks; ++block) {
    in += internal[block];
    bd += boundary[block];
  }
  return in + bd;
}

std::vector<double> InteractionEngine::fields(const GridPartition& partition) const {
  check(partition);
  const int m = partition.chambers();
  const auto mm = static_cast<std::size_t>(m);
  const std::size_t cells = coords_.size();
  const std::size_t E = exterior_labels_.size();
  std::vector<double> out(cells * mm, 0.0);
  const auto& labels = partition.labels();
  parallel_for_blocks(block_count(cells), [&](std::size_t block) {
    const std::size_t end = std::min(cells, (block + 1) * kBlockCells);
    for (std::size_t a = block * kBlockCells; a < end; ++a) {
      double* row = out.data() + a * mm;
      for (std::size_t b = 0; b < cells; ++b)
        if (b != a) row[labels[b] - 1] += table_[offset_index(a, b)];
      for (std::size_t e = 0; e < E; ++e) {
        const Label le = exterior_labels_[e];
        if (le <= m) row[le - 1] += exterior_fields_[a * E + e];
      }
    }
  });
  return out;
}

double InteractionEngine::tail_bound(double sigma_max) const {
  const int n = spec_.n;
  const double s = config_.s;
  return n * unit_ball_volume(n) * std::pow(spec_.side, n) * sigma_max / (2.0 * s * std::pow(config_.trunc_radius, 2.0 * s));
}

double interaction(std::span<const CellCoord> cells_a, std::span<const CellCoord> cells_b, const GridSpec& spec,
                   const KernelConfig& config) {
  spec.validate();
  if (!(config.s > 0.0 && config.s < 0.5)) throw std::invalid_argument("kernel exponent s must lie in (0, 1/2)");
  if (config.max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
  const std::set<CellCoord> in_a(cells_a.begin(), cells_a.end());
  if (in_a.size() != cells_a.size()) throw std::invalid_argument("cell set A lists a cell twice");
  const std::set<CellCoord> in_b(cells_b.begin(), cells_b.end());
  if (in_b.size() != cells_b.size()) throw std::invalid_argument("cell set B lists a cell twice");
  for (const CellCoord& c : cells_b)
    if (in_a.count(c)) throw std::invalid_argument("cell sets overlap; interaction requires disjoint interiors");

  // Sum in a canonical order so that swapping the arguments is bit-identical.
  const std::vector<CellCoord> sa(in_a.begin(), in_a.end());
  const std::vector<CellCoord> sb(in_b.begin(), in_b.end());
  const bool swap = sb < sa;
  const auto& first = swap ? sb : sa;
  const auto& second = swap ? sa : sb;

  const UnitPairKernel unit(spec.n, config.s, config.max_depth);
  double sum = 0.0;
  for (const CellCoord& x : first)
    for (const CellCoord& y : second) sum += unit(CellCoord{y[0] - x[0], y[1] - x[1], y[2] - x[2]});
  return std::pow(spec.h(), spec.n - 2.0 * config.s) * sum;
}

double perimeter_fractional(const GridPartition& partition, Label chamber, const KernelConfig& config) {
  const InteractionEngine engine(partition.spec(), config, partition.exterior());
  return engine.perimeter(partition, chamber);
}

EnergyReport multiphase_energy(const GridPartition& partition, const SurfaceTensionMatrix& sigma, const KernelConfig& config) {
  if (static_cast<int>(sigma.size()) != partition.chambers())
    throw std::invalid_argument("surface tension matrix has " + std::to_string(sigma.size()) + " chambers, partition has " +
                                std::to_string(partition.chambers()));
  const InteractionEngine engine(partition.spec(), config, partition.exterior());
  return engine.energy(partition, sigma);
}

double perimeter_classical(const GridPartition& partition, const SurfaceTensionMatrix& sigma) {
  if (static_cast<int>(sigma.size()) != partition.chambers())
    throw std::invalid_argument("surface tension matrix does not match the partition chamber count");
  const GridSpec& spec = partition.spec();
  const int N = spec.cells_per_side;
  const double face = std::pow(spec.h(), spec.n - 1);
  double total = 0.0;
  for (std::size_t c = 0; c < partition.size(); ++c) {
    const CellCoord x = partition.coord(c);
    for (int d = 0; d < spec.n; ++d) {
      const auto k = static_cast<std::size_t>(d);
      if (x[k] + 1 >= N) continue;
      CellCoord y = x;
      ++y[k];
      const Label a = partition.label(c);
      const Label b = partition.label(partition.index(y));
      if (a != b) total += sigma.between(a, b) * face;
    }
  }
  return total;
}

GridPartition PartitionShape::rasterize(const GridSpec& spec) const {
  return make_laminate(spec, chambers, path, axis);
}

std::vector<GammaScanRow> gamma_scan(const PartitionShape& shape, const SurfaceTensionMatrix& sigma, int n, double side,
                                     std::span<const double> s_values, std::span<const int> refinements,
                                     const KernelConfig& base) {
  if (!std::is_sorted(s_values.begin(), s_values.end())) throw std::invalid_argument("s values must be increasing");
  if (!std::is_sorted(refinements.begin(), refinements.end())) throw std::invalid_argument("refinements must be increasing");
  const double omega = unit_ball_volume(n - 1);
  std::vector<GammaScanRow> rows;
  for (double s : s_values)
    for (int N : refinements) {
      const GridSpec spec{n, N, side};
      KernelConfig cfg = base;
      cfg.s = s;
      const GridPartition partition = shape.rasterize(spec);
      const InteractionEngine engine(spec, cfg, partition.exterior());
      const EnergyReport r = engine.energy(partition, sigma);
      rows.push_back({s, N, r.internal, r.boundary, r.scaled_total, omega * perimeter_classical(partition, sigma), r.tail_bound});
    }
  return rows;
}

void write_gamma_scan_csv(std::ostream& out, std::span<const GammaScanRow> rows) {
  out << "s,N,internal,boundary,scaled_total,classical_target,tail_bound\n";
  for (const GammaScanRow& r : rows)
    out << format_number(r.s) << ',' << r.cells_per_side << ',' << format_number(r.internal) << ','
        << format_number(r.boundary) << ',' << format_number(r.scaled_total) << ',' << format_number(r.classical_target)
        << ',' << format_number(r.tail_bound) << '\n';
}

}  // namespace fracperim
