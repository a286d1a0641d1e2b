#include "fracperim/flowcut.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>

#include "fracperim/format.hpp"

namespace fracperim {

namespace {

constexpr double kStopRatio = 1e-13;
constexpr int kMaxVertices = 32;

void check_terminals(const FlowNetwork& net, Label source, Label sink) {
  const int m = net.size();
  if (source < 1 || source > m || sink < 1 || sink > m) throw std::out_of_range("flow terminal out of range");
  if (source == sink) throw std::invalid_argument("source and sink must differ");
}

struct Solver {
  int m;
  std::vector<double> net_flow;  // antisymmetric
  std::uint32_t reachable = 0;
};

Solver solve(const FlowNetwork& net, Label source, Label sink) {
  net.validate();
  check_terminals(net, source, sink);
  const int m = net.size();
  const auto mm = static_cast<std::size_t>(m);
  const double eps = kStopRatio * net.max_capacity();
  Solver out{m, std::vector<double>(mm * mm, 0.0), 0};
  auto residual = [&](int i, int j) {
    return net.capacity(i + 1, j + 1) - out.net_flow[static_cast<std::size_t>(i) * mm + static_cast<std::size_t>(j)];
  };

  std::vector<int> parent(mm);
  auto bfs = [&]() {
    std::fill(parent.begin(), parent.end(), -1);
    parent[static_cast<std::size_t>(source - 1)] = source - 1;
    std::queue<int> queue;
    queue.push(source - 1);
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop();
      for (int v = 0; v < m; ++v)
        if (parent[static_cast<std::size_t>(v)] < 0 && residual(u, v) > eps) {
          parent[static_cast<std::size_t>(v)] = u;
          queue.push(v);
        }
    }
    return parent[static_cast<std::size_t>(sink - 1)] >= 0;
  };

  while (bfs()) {
    double bottleneck = std::numeric_limits<double>::infinity();
    for (int v = sink - 1; v != source - 1; v = parent[static_cast<std::size_t>(v)])
      bottleneck = std::min(bottleneck, residual(parent[static_cast<std::size_t>(v)], v));
    for (int v = sink - 1; v != source - 1; v = parent[static_cast<std::size_t>(v)]) {
      const auto u = static_cast<std::size_t>(parent[static_cast<std::size_t>(v)]);
      const auto w = static_cast<std::size_t>(v);
      out.net_flow[u * mm + w] += bottleneck;
      out.net_flow[w * mm + u] = -out.net_flow[u * mm + w];
    }
  }
  for (int v = 0; v < m; ++v)
    if (parent[static_cast<std::size_t>(v)] >= 0) out.reachable |= 1U << v;
  return out;
}

}  // namespace

FlowNetwork::FlowNetwork(int m) : m_(m) {
  if (m < 2 || m > kMaxVertices) throw std::invalid_argument("flow network needs between 2 and 32 vertices");
  capacity_.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
}

void FlowNetwork::set_capacity(Label i, Label j, double value) {
  if (i < 1 || i > m_ || j < 1 || j > m_) throw std::out_of_range("vertex out of range");
  if (i == j) throw std::invalid_argument("no loops in a flow network");
  if (!(value >= 0.0) || !std::isfinite(value)) throw std::invalid_argument("capacity must be finite and nonnegative");
  capacity_[slot(i, j)] = value;
  capacity_[slot(j, i)] = value;
}

double FlowNetwork::max_capacity() const {
  double best = 0.0;
  for (double c : capacity_) best = std::max(best, c);
  return best;
}

void FlowNetwork::validate() const {
  if (m_ < 2) throw std::invalid_argument("flow network needs at least two vertices");
  for (Label i = 1; i <= m_; ++i)
    for (Label j = 1; j <= m_; ++j) {
      const double c = capacity(i, j);
      if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("capacity must be finite and nonnegative");
      if (i == j && c != 0.0) throw std::invalid_argument("capacity on a loop must be zero");
      if (c != capacity(j, i)) throw std::invalid_argument("capacities must be symmetric");
    }
}

double Flow::balance(Label v) const {
  double sum = 0.0;
  for (Label u = 1; u <= m; ++u) sum += on(v, u) - on(u, v);
  return sum;
}

double cut_size(const FlowNetwork& net, const Cut& cut) {
  if (cut.m != net.size()) throw std::invalid_argument("cut and network sizes differ");
  double total = 0.0;
  for (Label i = 1; i <= cut.m; ++i)
    for (Label j = 1; j <= cut.m; ++j)
      if (cut.on_source_side(i) && !cut.on_source_side(j)) total += net.capacity(i, j);
  return total;
}

double PathDecomposition::total() const {
  double sum = 0.0;
  for (const auto& p : paths) sum += p.weight;
  return sum;
}

FlowNetwork network_from_pairs(const PairInteractions& pairs) {
  FlowNetwork net(pairs.m);
  for (Label i = 1; i <= pairs.m; ++i)
    for (Label j = i + 1; j <= pairs.m; ++j) net.set_capacity(i, j, pairs.total_at(i, j));
  return net;
}

FlowNetwork build_network(const InteractionEngine& engine, const GridPartition& partition) {
  if (partition.exterior().kind == ExteriorRule::Kind::none)
    throw std::invalid_argument("build_network needs a partition with an exterior rule");
  return network_from_pairs(engine.pair_interactions(partition));
}

FlowNetwork build_network(const GridPartition& partition, const KernelConfig& config) {
  const InteractionEngine engine(partition.spec(), config, partition.exterior());
  return build_network(engine, partition);
}

Flow max_flow(const FlowNetwork& net, Label source, Label sink) {
  const Solver solved = solve(net, source, sink);
  Flow flow{net.size(), source, sink, std::vector<double>(solved.net_flow.size(), 0.0)};
  for (std::size_t k = 0; k < solved.net_flow.size(); ++k) flow.arcs[k] = std::max(solved.net_flow[k], 0.0);
  return flow;
}

Cut min_cut(const FlowNetwork& net, Label source, Label sink) {
  const Solver solved = solve(net, source, sink);
  return Cut{net.size(), solved.reachable};
}

void validate_flow(const FlowNetwork& net, const Flow& flow) {
  net.validate();
  if (flow.m != net.size()) throw std::invalid_argument("flow and network sizes differ");
  if (flow.arcs.size() != static_cast<std::size_t>(flow.m) * static_cast<std::size_t>(flow.m))
    throw std::invalid_argument("flow arc table has the wrong size");
  check_terminals(net, flow.source, flow.sink);
  const double tol = 1e-9 * std::max(net.max_capacity(), 1e-300);
  for (Label i = 1; i <= flow.m; ++i)
    for (Label j = 1; j <= flow.m; ++j) {
      const double f = flow.on(i, j);
      if (!(f >= 0.0) || !std::isfinite(f)) throw std::invalid_argument("flow values must be finite and nonnegative");
      if (f > net.capacity(i, j) + tol)
        throw std::invalid_argument("flow exceeds capacity on arc " + std::to_string(i) + "->" + std::to_string(j));
    }
  for (Label v = 1; v <= flow.m; ++v)
    if (v != flow.source && v != flow.sink && std::abs(flow.balance(v)) > tol)
      throw std::invalid_argument("flow is not conserved at vertex " + std::to_string(v));
  if (flow.balance(flow.source) < -tol) throw std::invalid_argument("flow runs into the source");
}

PathDecomposition decompose_flow(const FlowNetwork& net, const Flow& flow) {
  validate_flow(net, flow);
  const int m = flow.m;
  const auto mm = static_cast<std::size_t>(m);
  // Opposite arcs cancel first, so no path family can use both e_kl and e_lk.
  std::vector<double> f(mm * mm, 0.0);
  for (std::size_t i = 0; i < mm; ++i)
    for (std::size_t j = 0; j < mm; ++j) f[i * mm + j] = std::max(flow.arcs[i * mm + j] - flow.arcs[j * mm + i], 0.0);

  const auto s = static_cast<std::size_t>(flow.source - 1);
  const auto t = static_cast<std::size_t>(flow.sink - 1);
  PathDecomposition out;
  for (;;) {
    // Widest path: maximize the bottleneck, ties to the smaller predecessor.
    std::vector<double> width(mm, 0.0);
    std::vector<int> parent(mm, -1);
    std::vector<bool> done(mm, false);
    width[s] = std::numeric_limits<double>::infinity();
    for (std::size_t round = 0; round < mm; ++round) {
      std::size_t u = mm;
      for (std::size_t v = 0; v < mm; ++v)
        if (!done[v] && width[v] > 0.0 && (u == mm || width[v] > width[u])) u = v;
      if (u == mm) break;
      done[u] = true;
      for (std::size_t v = 0; v < mm; ++v) {
        const double w = std::min(width[u], f[u * mm + v]);
        if (!done[v] && w > width[v]) {
          width[v] = w;
          parent[v] = static_cast<int>(u);
        }
      }
    }
    if (!(width[t] > 0.0) || std::isinf(width[t])) break;
    FlowPath path;
    path.weight = width[t];
    for (std::size_t v = t;; v = static_cast<std::size_t>(parent[v])) {
      path.vertices.push_back(static_cast<Label>(v + 1));
      if (v == s) break;
    }
    std::reverse(path.vertices.begin(), path.vertices.end());
    for (std::size_t k = 0; k + 1 < path.vertices.size(); ++k) {
      const auto u = static_cast<std::size_t>(path.vertices[k] - 1);
      const auto v = static_cast<std::size_t>(path.vertices[k + 1] - 1);
      f[u * mm + v] = f[u * mm + v] > path.weight ? f[u * mm + v] - path.weight : 0.0;
    }
    out.paths.push_back(std::move(path));
  }
  return out;
}

Replacement replace_detailed(const GridPartition& partition, Label i, Label j, const KernelConfig& config) {
  const int m = partition.chambers();
  if (i < 1 || i > m || j < 1 || j > m || i == j) throw std::invalid_argument("replace needs two distinct chambers");
  const ExteriorRule& ext = partition.exterior();
  if (ext.kind != ExteriorRule::Kind::halfspace_pair || ext.upper != i || ext.lower != j)
    throw std::invalid_argument("replace needs the exterior half-space pair of chambers " + std::to_string(i) + " and " +
                                std::to_string(j) + ", got " + ext.to_string());
  const FlowNetwork net = build_network(partition, config);
  const Cut cut = min_cut(net, i, j);
  std::vector<Label> labels(partition.labels());
  for (Label& l : labels) l = cut.on_source_side(l) ? i : j;
  return {GridPartition(partition.spec(), m, ext, std::move(labels)), net, cut};
}

GridPartition replace(const GridPartition& partition, Label i, Label j, const KernelConfig& config) {
  return replace_detailed(partition, i, j, config).partition;
}

void write_network(std::ostream& out, const FlowNetwork& net) {
  out << net.size() << '\n';
  for (Label i = 1; i <= net.size(); ++i) {
    for (Label j = 1; j <= net.size(); ++j) out << (j > 1 ? " " : "") << format_number(net.capacity(i, j));
    out << '\n';
  }
}

FlowNetwork read_network(std::istream& in) {
  int m = 0;
  if (!(in >> m) || m < 2 || m > kMaxVertices) throw std::runtime_error("network: bad vertex count");
  std::vector<double> values(static_cast<std::size_t>(m) * static_cast<std::size_t>(m));
  for (double& v : values)
    if (!(in >> v)) throw std::runtime_error("network: truncated capacity table");
  FlowNetwork net(m);
  for (Label i = 1; i <= m; ++i)
    for (Label j = 1; j <= m; ++j) {
      const double a = values[static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(m) + static_cast<std::size_t>(j - 1)];
      const double b = values[static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(m) + static_cast<std::size_t>(i - 1)];
      if (a != b) throw std::runtime_error("network: capacities must be symmetric");
      if (i == j && a != 0.0) throw std::runtime_error("network: nonzero diagonal");
      if (i < j) net.set_capacity(i, j, a);
    }
  return net;
}

void write_flow(std::ostream& out, const Flow& flow) {
  out << "from,to,value\n";
  for (Label i = 1; i <= flow.m; ++i)
    for (Label j = 1; j <= flow.m; ++j)
      if (flow.on(i, j) > 0.0) out << i << ',' << j << ',' << format_number(flow.on(i, j)) << '\n';
}

void write_cut(std::ostream& out, const FlowNetwork& net, const Cut& cut, Label source, Label sink) {
  out << "source,sink,source_side_mask,size\n";
  out << source << ',' << sink << ',' << cut.source_side << ',' << format_number(cut_size(net, cut)) << '\n';
}

void write_paths(std::ostream& out, const PathDecomposition& paths) {
  out << "path,weight\n";
  for (const auto& p : paths.paths) {
    for (std::size_t k = 0; k < p.vertices.size(); ++k) out << (k ? "-" : "") << p.vertices[k];
    out << ',' << format_number(p.weight) << '\n';
  }
}

}  // namespace fracperim
