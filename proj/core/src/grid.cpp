#include "fracperim/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <locale>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fracperim {

std::size_t GridSpec::cell_count() const {
  std::size_t count = 1;
  for (int k = 0; k < n; ++k) count *= static_cast<std::size_t>(cells_per_side);
  return count;
}

void GridSpec::validate() const {
  if (n != 2 && n != 3) throw std::invalid_argument("grid dimension must be 2 or 3");
  if (cells_per_side < 2) throw std::invalid_argument("grid needs at least 2 cells per side");
  if (!(side > 0.0) || !std::isfinite(side)) throw std::invalid_argument("box side must be positive");
}

Label ExteriorRule::label_at(double coordinate) const {
  switch (kind) {
    case Kind::none: return 0;
    case Kind::constant: return upper;
    case Kind::halfspace_pair: return coordinate >= offset ? upper : lower;
  }
  return 0;
}

std::vector<Label> ExteriorRule::labels() const {
  switch (kind) {
    case Kind::none: return {};
    case Kind::constant: return {upper};
    case Kind::halfspace_pair: return {upper, lower};
  }
  return {};
}

std::string ExteriorRule::to_string() const {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  switch (kind) {
    case Kind::none: out << "none"; break;
    case Kind::constant: out << "constant:" << upper; break;
    case Kind::halfspace_pair:
      out << "halfpair:" << upper << ',' << lower << ",axis" << axis;
      if (offset != 0.0) {
        out.precision(17);
        out << ",offset=" << offset;
      }
      break;
  }
  return out.str();
}

ExteriorRule ExteriorRule::parse(const std::string& text) {
  auto fail = [&]() -> ExteriorRule { throw std::runtime_error("bad exterior rule '" + text + "'"); };
  if (text == "none") return none();
  auto parse_int = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      fail();
    }
    if (used != s.size()) fail();
    return v;
  };
  if (text.rfind("constant:", 0) == 0) return constant(parse_int(text.substr(9)));
  if (text.rfind("halfpair:", 0) == 0) {
    std::vector<std::string> parts;
    std::stringstream ss(text.substr(9));
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    if (parts.size() != 3 && parts.size() != 4) fail();
    if (parts[2].rfind("axis", 0) != 0) fail();
    ExteriorRule rule = halfspace_pair(parse_int(parts[0]), parse_int(parts[1]),
                                       parse_int(parts[2].substr(4)));
    if (parts.size() == 4) {
      if (parts[3].rfind("offset=", 0) != 0) fail();
      std::istringstream v(parts[3].substr(7));
      v.imbue(std::locale::classic());
      if (!(v >> rule.offset) || !v.eof()) fail();
    }
    return rule;
  }
  return fail();
}

namespace {

void check_exterior(const ExteriorRule& rule, int chambers, int n) {
  for (Label l : rule.labels())
    if (l < 1 || l > chambers) throw std::invalid_argument("exterior label out of range");
  if (rule.kind == ExteriorRule::Kind::halfspace_pair) {
    if (rule.axis < 1 || rule.axis > n) throw std::invalid_argument("exterior axis out of range");
    if (rule.upper == rule.lower) throw std::invalid_argument("half-space pair needs two labels");
  }
}

}  // namespace

GridPartition::GridPartition(GridSpec spec, int chambers, ExteriorRule exterior,
                             std::vector<Label> labels)
    : spec_(spec), chambers_(chambers), exterior_(exterior), labels_(std::move(labels)) {
  spec_.validate();
  if (chambers_ < 2) throw std::invalid_argument("partition needs at least two chambers");
  check_exterior(exterior_, chambers_, spec_.n);
  if (labels_.size() != spec_.cell_count()) throw std::invalid_argument("label count does not match grid");
  for (Label l : labels_)
    if (l < 1 || l > chambers_) throw std::invalid_argument("cell label out of range");
}

GridPartition::GridPartition(GridSpec spec, int chambers, ExteriorRule exterior, Label fill)
    : GridPartition(spec, chambers, exterior, std::vector<Label>(spec.cell_count(), fill)) {}

void GridPartition::set_label(std::size_t cell, Label value) {
  if (value < 1 || value > chambers_) throw std::invalid_argument("cell label out of range");
  labels_.at(cell) = value;
}

CellCoord GridPartition::coord(std::size_t cell) const {
  CellCoord c{0, 0, 0};
  const auto N = static_cast<std::size_t>(spec_.cells_per_side);
  for (int k = 0; k < spec_.n; ++k) {
    c[static_cast<std::size_t>(k)] = static_cast<int>(cell % N);
    cell /= N;
  }
  return c;
}

std::size_t GridPartition::index(const CellCoord& c) const {
  std::size_t idx = 0;
  for (int k = spec_.n - 1; k >= 0; --k)
    idx = idx * static_cast<std::size_t>(spec_.cells_per_side) + static_cast<std::size_t>(c[static_cast<std::size_t>(k)]);
  return idx;
}

double GridPartition::center(std::size_t cell, int axis) const {
  const CellCoord c = coord(cell);
  return -spec_.side / 2.0 + (c[static_cast<std::size_t>(axis - 1)] + 0.5) * spec_.h();
}

bool GridPartition::on_boundary_ring(std::size_t cell) const {
  const CellCoord c = coord(cell);
  for (int k = 0; k < spec_.n; ++k) {
    const int v = c[static_cast<std::size_t>(k)];
    if (v == 0 || v == spec_.cells_per_side - 1) return true;
  }
  return false;
}

GridPartition GridPartition::with_exterior(ExteriorRule exterior) const {
  return GridPartition(spec_, chambers_, exterior, labels_);
}

GridPartition make_halfspace_pair(const GridSpec& spec, int chambers, Label upper, Label lower,
                                  int axis) {
  if (upper == lower) throw std::invalid_argument("half-space pair needs distinct chambers");
  spec.validate();
  if (axis < 1 || axis > spec.n) throw std::invalid_argument("axis out of range");
  GridPartition out(spec, chambers, ExteriorRule::halfspace_pair(upper, lower, axis), upper);
  for (std::size_t c = 0; c < out.size(); ++c)
    out.set_label(c, out.center(c, axis) >= 0.0 ? upper : lower);
  return out;
}

int minimal_laminate_resolution(const LaminatePath& path) {
  const auto strips = static_cast<double>(path.chambers.size()) - 2.0;
  if (strips < 1.0) return 2;
  // h <= L t_q  <=>  N >= 2^(q+1) (H-1)
  const double need = std::ldexp(strips, path.stage + 1);
  return std::max(2, static_cast<int>(std::ceil(need - 1e-9)));
}

GridPartition make_laminate(const GridSpec& spec, int chambers, const LaminatePath& path, int axis) {
  const auto& ids = path.chambers;
  if (ids.size() < 2) throw std::invalid_argument("laminate path needs at least two chambers");
  if (path.stage < 0) throw std::invalid_argument("laminate stage must be >= 0");
  for (std::size_t a = 0; a < ids.size(); ++a) {
    if (ids[a] < 1 || ids[a] > chambers) throw std::invalid_argument("laminate chamber out of range");
    for (std::size_t b = a + 1; b < ids.size(); ++b)
      if (ids[a] == ids[b]) throw std::invalid_argument("laminate path indices must be distinct");
  }
  if (static_cast<int>(ids.size()) - 1 > chambers - 1)
    throw std::invalid_argument("laminate path longer than m-1 steps");
  const Label top = ids.front();
  const Label bottom = ids.back();
  if (ids.size() == 2) return make_halfspace_pair(spec, chambers, top, bottom, axis);

  const int needed = minimal_laminate_resolution(path);
  if (spec.cells_per_side < needed)
    throw std::invalid_argument("laminate strips thinner than one cell: need N >= " +
                                std::to_string(needed));

  const int strips = static_cast<int>(ids.size()) - 2;
  const double slab = std::ldexp(spec.side, -(path.stage + 1));
  const double strip = slab / strips;
  GridPartition out = make_halfspace_pair(spec, chambers, top, bottom, axis);
  for (std::size_t c = 0; c < out.size(); ++c) {
    const double x = out.center(c, axis);
    if (x >= slab / 2.0) continue;
    if (x < -slab / 2.0) continue;
    int h = static_cast<int>(std::floor((slab / 2.0 - x) / strip)) + 1;
    h = std::clamp(h, 1, strips);
    out.set_label(c, ids[static_cast<std::size_t>(h)]);
  }
  return out;
}

std::vector<double> volumes(const GridPartition& partition) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(partition.chambers()), 0);
  for (Label l : partition.labels()) ++counts[static_cast<std::size_t>(l - 1)];
  const double cell = std::pow(partition.spec().h(), partition.spec().n);
  std::vector<double> out(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) out[k] = static_cast<double>(counts[k]) * cell;
  return out;
}

std::vector<double> l1_distance(const GridPartition& a, const GridPartition& b) {
  if (!(a.spec() == b.spec())) throw std::invalid_argument("l1_distance: grid specs differ");
  const int m = std::max(a.chambers(), b.chambers());
  std::vector<std::size_t> counts(static_cast<std::size_t>(m), 0);
  for (std::size_t c = 0; c < a.size(); ++c) {
    if (a.label(c) == b.label(c)) continue;
    ++counts[static_cast<std::size_t>(a.label(c) - 1)];
    ++counts[static_cast<std::size_t>(b.label(c) - 1)];
  }
  const double cell = std::pow(a.spec().h(), a.spec().n);
  std::vector<double> out(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) out[k] = static_cast<double>(counts[k]) * cell;
  return out;
}

void write_partition(std::ostream& out, const GridPartition& p) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf.precision(17);
  const auto& spec = p.spec();
  buf << "n=" << spec.n << " N=" << spec.cells_per_side << " L=" << spec.side
      << " m=" << p.chambers() << " exterior=" << p.exterior().to_string() << '\n';
  const auto N = static_cast<std::size_t>(spec.cells_per_side);
  for (std::size_t c = 0; c < p.size(); ++c) {
    buf << p.label(c);
    buf << ((c + 1) % N == 0 ? '\n' : ' ');
  }
  out << buf.str();
}

GridPartition read_partition(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("partition: missing header");
  std::istringstream hs(header);
  hs.imbue(std::locale::classic());
  GridSpec spec;
  int m = 0;
  ExteriorRule exterior;
  bool seen[5] = {false, false, false, false, false};
  std::string field;
  while (hs >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw std::runtime_error("partition: malformed header field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    std::istringstream vs(value);
    vs.imbue(std::locale::classic());
    bool ok = true;
    if (key == "n") { ok = static_cast<bool>(vs >> spec.n) && vs.eof(); seen[0] = true; }
    else if (key == "N") { ok = static_cast<bool>(vs >> spec.cells_per_side) && vs.eof(); seen[1] = true; }
    else if (key == "L") { ok = static_cast<bool>(vs >> spec.side) && vs.eof(); seen[2] = true; }
    else if (key == "m") { ok = static_cast<bool>(vs >> m) && vs.eof(); seen[3] = true; }
    else if (key == "exterior") { exterior = ExteriorRule::parse(value); seen[4] = true; }
    else throw std::runtime_error("partition: unknown header field '" + key + "'");
    if (!ok) throw std::runtime_error("partition: bad value for '" + key + "'");
  }
  for (bool s : seen)
    if (!s) throw std::runtime_error("partition: incomplete header");
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("partition: ") + e.what());
  }
  if (m < 2) throw std::runtime_error("partition: bad chamber count");
  std::vector<Label> labels;
  labels.reserve(spec.cell_count());
  long long v = 0;
  while (labels.size() < spec.cell_count() && (in >> v)) {
    if (v < 1 || v > m) throw std::runtime_error("partition: label " + std::to_string(v) + " out of range");
    labels.push_back(static_cast<Label>(v));
  }
  if (labels.size() != spec.cell_count()) throw std::runtime_error("partition: truncated payload");
  std::string rest;
  if (in >> rest) throw std::runtime_error("partition: trailing data");
  try {
    return GridPartition(spec, m, exterior, std::move(labels));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("partition: ") + e.what());
  }
}

std::string serialize(const GridPartition& partition) {
  std::ostringstream out;
  write_partition(out, partition);
  return out.str();
}

GridPartition deserialize(const std::string& bytes) {
  std::istringstream in(bytes);
  return read_partition(in);
}

GridPartition load_partition(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open partition file " + path);
  return read_partition(in);
}

}  // namespace fracperim
