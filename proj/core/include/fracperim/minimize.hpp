#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fracperim/grid.hpp"
#include "fracperim/kernel.hpp"
#include "fracperim/tensions.hpp"

namespace fracperim {

struct MinimizeConfig {
  enum class Strategy { greedy, annealed };

  Strategy strategy = Strategy::greedy;
  int max_sweeps = 200;
  /// Annealing temperature at sweep 0, relative to the cell energy scale
  /// (sigma_max times the total interaction of a central cell).
  double initial_temperature = 0.05;
  double decay = 0.9;  // temperature factor per sweep
  std::uint64_t seed = 0;

  void validate() const;

  static Strategy parse_strategy(const std::string& text);
  static std::string to_string(Strategy strategy);
};

struct SweepRecord {
  int sweep = 0;
  std::size_t accepted = 0;
  double energy = 0.0;  // P^sigma_2s after the sweep
  double third_phase_volume = 0.0;
};

struct SearchResult {
  GridPartition partition;
  EnergyReport report;
  std::vector<SweepRecord> log;
};

/// Energy change of relabeling one cell, from its kernel row.
double flip_delta(const InteractionEngine& engine, const GridPartition& partition, std::size_t cell, Label new_label,
                  const SurfaceTensionMatrix& sigma);
double flip_delta(const GridPartition& partition, std::size_t cell, Label new_label, const SurfaceTensionMatrix& sigma,
                  const KernelConfig& config);

/// Volume of the cells whose label is not produced by the exterior rule.
double third_phase_volume(const GridPartition& partition);

/// Cell-flip descent on the cells off the boundary ring. Greedy sweeps visit
/// cells in index order and take the most negative delta; annealed runs do
/// max_sweeps Metropolis sweeps followed by greedy sweeps to convergence.
SearchResult local_search(const InteractionEngine& engine, const GridPartition& start, const SurfaceTensionMatrix& sigma,
                          const MinimizeConfig& config);

struct GammaBarEstimate {
  double best = 0.0;              // min over restarts of (1-2s) P^sigma
  double halfspace = 0.0;         // (1-2s) P^sigma(h_ij) = (1-2s) sigma_ij P_2s(H, Q)
  double gap = 0.0;               // best - halfspace
  std::vector<double> per_restart;
  GridPartition partition;        // best configuration found
};

/// Upper estimate of the constrained cell value: restart 0 starts at h_ij,
/// restart r > 0 from random interior labels drawn with seed + r.
GammaBarEstimate gamma_bar_estimate(const InteractionEngine& engine, int chambers, Label i, Label j,
                                    const SurfaceTensionMatrix& sigma_bar, const MinimizeConfig& config, int restarts);

struct WettingRow {
  double s = 0.0;
  int cells_per_side = 0;
  double third_phase_volume = 0.0;
  double achieved = 0.0;        // (1-2s) P^sigma of the minimizer
  double pure_interface = 0.0;  // sigma_ij (1-2s) P_2s(H, Q)
  double relaxed_target = 0.0;  // sigma_bar_ij (1-2s) P_2s(H, Q)
  bool success = false;         // achieved < pure_interface and volume > 0
};

struct WettingResult {
  std::vector<WettingRow> rows;
  std::vector<GridPartition> minimizers;
  std::vector<std::vector<SweepRecord>> logs;
};

/// Minimizes from h_ij under sigma itself (not its relaxation) for every
/// (s, N). sigma must violate the triangle inequality on the pair (i, j).
WettingResult wetting_experiment(const SurfaceTensionMatrix& sigma, Label i, Label j, int n, double side,
                                 std::span<const double> s_values, std::span<const int> refinements,
                                 const KernelConfig& base, const MinimizeConfig& config);

struct ExhaustiveResult {
  double best = 0.0;             // minimal P^sigma over all labelings
  double runner_up = 0.0;        // smallest energy among the other labelings
  std::size_t minimizers = 0;    // labelings within 1e-12 relative of best
  std::vector<Label> labels;     // a minimizing labeling
};

/// Enumerates all m^(N^n) labelings of the box cells (at most 2^22 states).
ExhaustiveResult exhaustive_search(const InteractionEngine& engine, int chambers, const SurfaceTensionMatrix& sigma);

void write_sweep_log(std::ostream& out, std::span<const SweepRecord> log);
void write_wetting_csv(std::ostream& out, std::span<const WettingRow> rows);

}  // namespace fracperim
