#include "fracperim/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "fracperim/format.hpp"
#include "fracperim/parallel.hpp"

namespace fracperim {

namespace {

constexpr double kAcceptRatio = 1e-13;

// Uniform double in [0, 1) from the top 53 bits; independent of the
// standard library's distribution implementations.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

void require_sigma(const GridPartition& partition, const SurfaceTensionMatrix& sigma) {
  if (static_cast<int>(sigma.size()) != partition.chambers())
    throw std::invalid_argument("surface tension matrix has " + std::to_string(sigma.size()) + " chambers, partition has " +
                                std::to_string(partition.chambers()));
  require_valid(sigma);
}

// Field-based incremental state for one search trajectory.
class FlipState {
 public:
  FlipState(const InteractionEngine& engine, GridPartition partition, const SurfaceTensionMatrix& sigma)
      : engine_(engine), partition_(std::move(partition)), sigma_(sigma), m_(partition_.chambers()),
        fields_(engine.fields(partition_)) {}

  const GridPartition& partition() const { return partition_; }

  double delta(std::size_t cell, Label to) const {
    const Label from = partition_.label(cell);
    if (from == to) return 0.0;
    const double* row = fields_.data() + cell * static_cast<std::size_t>(m_);
    double d = 0.0;
    for (Label k = 1; k <= m_; ++k) d += (sigma_.between(to, k) - sigma_.between(from, k)) * row[k - 1];
    return d;
  }

  void flip(std::size_t cell, Label to) {
    const Label from = partition_.label(cell);
    if (from == to) return;
    const auto mm = static_cast<std::size_t>(m_);
    for (std::size_t b = 0; b < partition_.size(); ++b) {
      if (b == cell) continue;
      const double k = engine_.kernel(cell, b);
      fields_[b * mm + static_cast<std::size_t>(from - 1)] -= k;
      fields_[b * mm + static_cast<std::size_t>(to - 1)] += k;
    }
    partition_.set_label(cell, to);
  }

 private:
  const InteractionEngine& engine_;
  GridPartition partition_;
  const SurfaceTensionMatrix& sigma_;
  int m_;
  std::vector<double> fields_;
};

double cell_energy_scale(const InteractionEngine& engine, const SurfaceTensionMatrix& sigma) {
  const GridSpec& spec = engine.spec();
  CellCoord center{0, 0, 0};
  for (int d = 0; d < spec.n; ++d) center[static_cast<std::size_t>(d)] = spec.cells_per_side / 2;
  const GridPartition probe(spec, 2, ExteriorRule::none(), 1);
  const std::size_t a = probe.index(center);
  double sum = 0.0;
  for (std::size_t b = 0; b < probe.size(); ++b)
    if (b != a) sum += engine.kernel(a, b);
  for (Label e : engine.exterior().labels()) sum += engine.exterior_field(a, e);
  return sigma.max_off_diagonal() * sum;
}

std::vector<std::size_t> free_cells(const GridPartition& partition) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < partition.size(); ++c)
    if (!partition.on_boundary_ring(c)) out.push_back(c);
  return out;
}

}  // namespace

void MinimizeConfig::validate() const {
  if (max_sweeps < 1) throw std::invalid_argument("max_sweeps must be >= 1");
  if (strategy == Strategy::annealed) {
    if (!(initial_temperature > 0.0)) throw std::invalid_argument("initial temperature must be positive");
    if (!(decay > 0.0 && decay < 1.0)) throw std::invalid_argument("temperature decay must lie in (0, 1)");
  }
}

MinimizeConfig::Strategy MinimizeConfig::parse_strategy(const std::string& text) {
  if (text == "greedy" || text == "greedy-cell-flip") return Strategy::greedy;
  if (text == "annealed" || text == "annealed-cell-flip") return Strategy::annealed;
  throw std::invalid_argument("unknown strategy '" + text + "' (expected greedy or annealed)");
}

std::string MinimizeConfig::to_string(Strategy strategy) {
  return strategy == Strategy::greedy ? "greedy" : "annealed";
}

double flip_delta(const InteractionEngine& engine, const GridPartition& partition, std::size_t cell, Label new_label,
                  const SurfaceTensionMatrix& sigma) {
  require_sigma(partition, sigma);
  if (cell >= partition.size()) throw std::out_of_range("cell index out of range");
  if (new_label < 1 || new_label > partition.chambers()) throw std::out_of_range("label out of range");
  const Label old_label = partition.label(cell);
  if (old_label == new_label) return 0.0;
  const int m = partition.chambers();
  std::vector<double> row(static_cast<std::size_t>(m), 0.0);
  for (std::size_t b = 0; b < partition.size(); ++b)
    if (b != cell) row[static_cast<std::size_t>(partition.label(b) - 1)] += engine.kernel(cell, b);
  for (Label e : partition.exterior().labels()) row[static_cast<std::size_t>(e - 1)] += engine.exterior_field(cell, e);
  double d = 0.0;
  for (Label k = 1; k <= m; ++k) d += (sigma.between(new_label, k) - sigma.between(old_label, k)) * row[static_cast<std::size_t>(k - 1)];
  return d;
}

double flip_delta(const GridPartition& partition, std::size_t cell, Label new_label, const SurfaceTensionMatrix& sigma,
                  const KernelConfig& config) {
  const InteractionEngine engine(partition.spec(), config, partition.exterior());
  return flip_delta(engine, partition, cell, new_label, sigma);
}

double third_phase_volume(const GridPartition& partition) {
  const auto outside = partition.exterior().labels();
  std::size_t count = 0;
  for (Label l : partition.labels())
    if (std::find(outside.begin(), outside.end(), l) == outside.end()) ++count;
  return static_cast<double>(count) * std::pow(partition.spec().h(), partition.spec().n);
}

SearchResult local_search(const InteractionEngine& engine, const GridPartition& start, const SurfaceTensionMatrix& sigma,
                          const MinimizeConfig& config) {
  config.validate();
  require_sigma(start, sigma);
  FlipState state(engine, start, sigma);
  const int m = start.chambers();
  const std::vector<std::size_t> cells = free_cells(start);
  std::vector<SweepRecord> log;
  double energy = engine.energy(start, sigma).total;
  const double threshold = kAcceptRatio * std::max(1.0, std::abs(energy));
  int sweep = 0;

  auto record = [&](std::size_t accepted) {
    energy = engine.energy(state.partition(), sigma).total;
    log.push_back({sweep, accepted, energy, third_phase_volume(state.partition())});
  };

  if (config.strategy == MinimizeConfig::Strategy::annealed && !cells.empty()) {
    std::mt19937_64 rng(config.seed);
    const double unit = cell_energy_scale(engine, sigma);
    double temperature = config.initial_temperature * unit;
    for (int k = 0; k < config.max_sweeps; ++k, temperature *= config.decay) {
      ++sweep;
      std::size_t accepted = 0;
      for (std::size_t step = 0; step < cells.size(); ++step) {
        const std::size_t cell = cells[uniform_index(rng, cells.size())];
        const Label from = state.partition().label(cell);
        Label to = static_cast<Label>(1 + uniform_index(rng, static_cast<std::size_t>(m - 1)));
        if (to >= from) ++to;
        const double d = state.delta(cell, to);
        const double u = unit_uniform(rng);
        if (d < 0.0 || u < std::exp(-d / temperature)) {
          state.flip(cell, to);
          ++accepted;
        }
      }
      record(accepted);
    }
  }

  for (int k = 0; k < config.max_sweeps && !cells.empty(); ++k) {
    ++sweep;
    std::size_t accepted = 0;
    for (std::size_t cell : cells) {
      Label best_label = state.partition().label(cell);
      double best = 0.0;
      for (Label to = 1; to <= m; ++to) {
        const double d = state.delta(cell, to);
        if (d < best) {
          best = d;
          best_label = to;
        }
      }
      if (best < -threshold) {
        state.flip(cell, best_label);
        ++accepted;
      }
    }
    record(accepted);
    if (accepted == 0) break;
  }

  SearchResult result{state.partition(), engine.energy(state.partition(), sigma), std::move(log)};
  return result;
}

GammaBarEstimate gamma_bar_estimate(const InteractionEngine& engine, int chambers, Label i, Label j,
                                    const SurfaceTensionMatrix& sigma_bar, const MinimizeConfig& config, int restarts) {
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  if (static_cast<int>(sigma_bar.size()) != chambers) throw std::invalid_argument("surface tension matrix size mismatch");
  require_valid(sigma_bar);
  if (!check_triangle(sigma_bar)) throw std::invalid_argument("gamma_bar_estimate needs a matrix satisfying the triangle inequality");
  const GridSpec& spec = engine.spec();
  const GridPartition flat = make_halfspace_pair(spec, chambers, i, j, spec.n);
  if (!(engine.exterior() == flat.exterior()))
    throw std::invalid_argument("engine exterior must be the half-space pair of the two chambers");
  const double factor = 1.0 - 2.0 * engine.config().s;

  std::vector<double> values(static_cast<std::size_t>(restarts), 0.0);
  std::vector<GridPartition> finals(static_cast<std::size_t>(restarts), flat);
  parallel_for_blocks(static_cast<std::size_t>(restarts), [&](std::size_t r) {
    GridPartition start = flat;
    MinimizeConfig local = config;
    local.seed = config.seed + r;
    if (r > 0) {
      std::mt19937_64 rng(local.seed);
      for (std::size_t c = 0; c < start.size(); ++c)
        if (!start.on_boundary_ring(c)) start.set_label(c, static_cast<Label>(1 + uniform_index(rng, static_cast<std::size_t>(chambers))));
    }
    SearchResult found = local_search(engine, start, sigma_bar, local);
    values[r] = factor * found.report.total;
    finals[r] = std::move(found.partition);
  });

  std::size_t best = 0;
  for (std::size_t r = 1; r < values.size(); ++r)
    if (values[r] < values[best]) best = r;
  const double halfspace = factor * engine.energy(flat, sigma_bar).total;
  return GammaBarEstimate{values[best], halfspace, values[best] - halfspace, values, finals[best]};
}

WettingResult wetting_experiment(const SurfaceTensionMatrix& sigma, Label i, Label j, int n, double side,
                                 std::span<const double> s_values, std::span<const int> refinements,
                                 const KernelConfig& base, const MinimizeConfig& config) {
  require_valid(sigma);
  const int m = static_cast<int>(sigma.size());
  if (i < 1 || i > m || j < 1 || j > m || i == j) throw std::invalid_argument("wetting needs two distinct chambers");
  const SurfaceTensionMatrix bar = relax(sigma);
  if (!(bar.between(i, j) < sigma.between(i, j)))
    throw std::invalid_argument("wetting needs a matrix violating the triangle inequality on the chosen pair");
  WettingResult out;
  for (double s : s_values)
    for (int N : refinements) {
      const GridSpec spec{n, N, side};
      KernelConfig cfg = base;
      cfg.s = s;
      const GridPartition flat = make_halfspace_pair(spec, m, i, j, n);
      const InteractionEngine engine(spec, cfg, flat.exterior());
      const double factor = 1.0 - 2.0 * s;
      const double perimeter = engine.perimeter(flat, i);
      SearchResult found = local_search(engine, flat, sigma, config);
      WettingRow row;
      row.s = s;
      row.cells_per_side = N;
      row.third_phase_volume = third_phase_volume(found.partition);
      row.achieved = found.report.scaled_total;
      row.pure_interface = sigma.between(i, j) * factor * perimeter;
      row.relaxed_target = bar.between(i, j) * factor * perimeter;
      row.success = row.achieved < row.pure_interface && row.third_phase_volume > 0.0;
      out.rows.push_back(row);
      out.minimizers.push_back(std::move(found.partition));
      out.logs.push_back(std::move(found.log));
    }
  return out;
}

ExhaustiveResult exhaustive_search(const InteractionEngine& engine, int chambers, const SurfaceTensionMatrix& sigma) {
  if (static_cast<int>(sigma.size()) != chambers) throw std::invalid_argument("surface tension matrix size mismatch");
  require_valid(sigma);
  const std::size_t cells = engine.spec().cell_count();
  const double states_d = std::pow(static_cast<double>(chambers), static_cast<double>(cells));
  if (states_d > static_cast<double>(1U << 22)) throw std::invalid_argument("exhaustive search limited to 2^22 labelings");
  const auto states = static_cast<std::size_t>(states_d);
  const auto mm = static_cast<std::size_t>(chambers);

  std::vector<double> kernel(cells * cells, 0.0);
  for (std::size_t a = 0; a < cells; ++a)
    for (std::size_t b = 0; b < cells; ++b)
      if (a != b) kernel[a * cells + b] = engine.kernel(a, b);
  std::vector<double> outside(cells * mm, 0.0);
  for (Label e : engine.exterior().labels()) {
    if (e > chambers) throw std::invalid_argument("exterior label exceeds the chamber count");
    for (std::size_t a = 0; a < cells; ++a) outside[a * mm + static_cast<std::size_t>(e - 1)] = engine.exterior_field(a, e);
  }

  auto decode = [&](std::size_t state, std::vector<Label>& labels) {
    for (std::size_t a = 0; a < cells; ++a) {
      labels[a] = static_cast<Label>(1 + state % mm);
      state /= mm;
    }
  };

  std::vector<double> energies(states, 0.0);
  constexpr std::size_t kBlock = 4096;
  parallel_for_blocks((states + kBlock - 1) / kBlock, [&](std::size_t block) {
    std::vector<Label> labels(cells);
    const std::size_t end = std::min(states, (block + 1) * kBlock);
    for (std::size_t state = block * kBlock; state < end; ++state) {
      decode(state, labels);
      double e = 0.0;
      for (std::size_t a = 0; a < cells; ++a) {
        const Label la = labels[a];
        for (std::size_t b = a + 1; b < cells; ++b)
          if (labels[b] != la) e += sigma.between(la, labels[b]) * kernel[a * cells + b];
        for (Label k = 1; k <= chambers; ++k)
          if (k != la) e += sigma.between(la, k) * outside[a * mm + static_cast<std::size_t>(k - 1)];
      }
      energies[state] = e;
    }
  });

  ExhaustiveResult out;
  std::size_t best = 0;
  for (std::size_t s = 1; s < states; ++s)
    if (energies[s] < energies[best]) best = s;
  out.best = energies[best];
  out.runner_up = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < states; ++s) {
    if (s != best) out.runner_up = std::min(out.runner_up, energies[s]);
    if (energies[s] <= out.best + 1e-12 * std::abs(out.best)) ++out.minimizers;
  }
  out.labels.resize(cells);
  decode(best, out.labels);
  return out;
}

void write_sweep_log(std::ostream& out, std::span<const SweepRecord> log) {
  out << "sweep,accepted,energy,third_phase_volume\n";
  for (const auto& r : log)
    out << r.sweep << ',' << r.accepted << ',' << format_number(r.energy) << ',' << format_number(r.third_phase_volume) << '\n';
}

void write_wetting_csv(std::ostream& out, std::span<const WettingRow> rows) {
  out << "s,N,third_phase_volume,achieved,pure_interface,relaxed_target,success\n";
  for (const auto& r : rows)
    out << format_number(r.s) << ',' << r.cells_per_side << ',' << format_number(r.third_phase_volume) << ','
        << format_number(r.achieved) << ',' << format_number(r.pure_interface) << ',' << format_number(r.relaxed_target)
        << ',' << (r.success ? 1 : 0) << '\n';
}

}  // namespace fracperim
