#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fracperim/grid.hpp"
#include "fracperim/kernel.hpp"

namespace fracperim {

/// Complete graph on chambers 1..m with symmetric nonnegative capacities.
class FlowNetwork {
 public:
  FlowNetwork() = default;
  explicit FlowNetwork(int m);

  int size() const { return m_; }
  double capacity(Label i, Label j) const { return capacity_[slot(i, j)]; }
  /// Sets both arcs i->j and j->i.
  void set_capacity(Label i, Label j, double value);
  double max_capacity() const;
  /// Throws unless capacities are finite, nonnegative, symmetric, zero on the diagonal.
  void validate() const;

  friend bool operator==(const FlowNetwork&, const FlowNetwork&) = default;

 private:
  std::size_t slot(Label i, Label j) const {
    return static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(j - 1);
  }

  int m_ = 0;
  std::vector<double> capacity_;
};

/// Nonnegative arc values; at most one of f(i, j), f(j, i) is nonzero.
struct Flow {
  int m = 0;
  Label source = 0;
  Label sink = 0;
  std::vector<double> arcs;  // row-major m x m, zero-based

  double on(Label i, Label j) const {
    return arcs[static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(m) + static_cast<std::size_t>(j - 1)];
  }
  /// Outflow minus inflow at v.
  double balance(Label v) const;
  /// |f|: net flow leaving the source.
  double value() const { return balance(source); }
};

/// Bipartition of the chambers; bit k-1 of source_side marks chamber k.
struct Cut {
  int m = 0;
  std::uint32_t source_side = 0;

  bool on_source_side(Label v) const { return (source_side >> (v - 1)) & 1U; }
};

double cut_size(const FlowNetwork& net, const Cut& cut);

struct FlowPath {
  std::vector<Label> vertices;  // source first, sink last
  double weight = 0.0;
};

struct PathDecomposition {
  std::vector<FlowPath> paths;

  double total() const;
};

/// Capacities p_kl = sum of the internal and exterior interactions between
/// chambers k and l. Requires an exterior rule.
FlowNetwork build_network(const GridPartition& partition, const KernelConfig& config);
FlowNetwork build_network(const InteractionEngine& engine, const GridPartition& partition);
FlowNetwork network_from_pairs(const PairInteractions& pairs);

/// Shortest-augmenting-path maximum flow. Augmentation stops once no path has
/// residual capacity above 1e-13 times the largest capacity.
Flow max_flow(const FlowNetwork& net, Label source, Label sink);

/// Minimum cut whose source side is the residual-reachable set of max_flow.
Cut min_cut(const FlowNetwork& net, Label source, Label sink);

/// Throws std::invalid_argument unless the flow respects capacities and
/// conservation (relative tolerance 1e-9 of the largest capacity).
void validate_flow(const FlowNetwork& net, const Flow& flow);

/// Simple source-sink paths carrying the flow, extracted greedily by largest
/// bottleneck after cancelling opposite arcs; leftover circulation is dropped.
PathDecomposition decompose_flow(const FlowNetwork& net, const Flow& flow);

struct Replacement {
  GridPartition partition;
  FlowNetwork network;
  Cut cut;
};

/// Two-chamber competitor: chambers on the source side of the i-j minimum cut
/// become i, the rest become j. The exterior must be the half-space pair of i and j.
Replacement replace_detailed(const GridPartition& partition, Label i, Label j, const KernelConfig& config);
GridPartition replace(const GridPartition& partition, Label i, Label j, const KernelConfig& config);

/// "m" followed by m rows of capacities.
void write_network(std::ostream& out, const FlowNetwork& net);
FlowNetwork read_network(std::istream& in);
/// CSV "from,to,value", one line per arc with positive flow.
void write_flow(std::ostream& out, const Flow& flow);
/// CSV "source,sink,source_side_mask,size".
void write_cut(std::ostream& out, const FlowNetwork& net, const Cut& cut, Label source, Label sink);
/// CSV "path,weight" with vertices joined by '-'.
void write_paths(std::ostream& out, const PathDecomposition& paths);

}  // namespace fracperim
