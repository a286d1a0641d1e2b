#include "fracperim/lab.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "fracperim/flowcut.hpp"
#include "fracperim/format.hpp"
#include "fracperim/parallel.hpp"

#ifndef FRACPERIM_VERSION
#define FRACPERIM_VERSION "0.0.0"
#endif

namespace fracperim {

namespace fs = std::filesystem;

namespace {

const char* const kManifestMagic = "fracperim manifest";
const char* const kConfigMarker = "--- config ---";
const char* const kManifestName = "manifest.txt";

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"", {"kind", "output"}},
      {"grid", {"n", "N", "L"}},
      {"kernel", {"s", "D", "R_t"}},
      {"sigma", {"file", "row"}},
      {"partition", {"shape", "file", "upper", "lower", "axis", "path", "stage", "seed", "exterior"}},
      {"scan", {"s", "N"}},
      {"minimize", {"strategy", "max_sweeps", "T0", "decay", "seed", "restarts"}},
      {"pair", {"i", "j"}},
  };
  return keys;
}

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::string spaced = text;
  std::replace(spaced.begin(), spaced.end(), ',', ' ');
  std::istringstream in(spaced);
  std::vector<std::string> out;
  for (std::string item; in >> item;) out.push_back(item);
  return out;
}

template <class T>
bool parse_value(const std::string& text, T& out) {
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && !text.empty();
}

std::string field_name(const std::string& section, const std::string& key) {
  return section.empty() ? key : "[" + section + "] " + key;
}

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

class EntryReader {
 public:
  explicit EntryReader(std::vector<std::string>& problems) : problems_(problems) {}

  std::string where(const Entry& e) const { return "line " + std::to_string(e.line) + ": " + field_name(e.section, e.key); }

  template <class T>
  bool number(const Entry& e, T& out, const char* expected) {
    if (parse_value(e.value, out)) return true;
    problems_.push_back(where(e) + ": expected " + expected + ", got '" + e.value + "'");
    return false;
  }

  template <class T>
  bool list(const Entry& e, std::vector<T>& out, const char* expected) {
    out.clear();
    for (const auto& item : split_list(e.value)) {
      T v{};
      if (!parse_value(item, v)) {
        problems_.push_back(where(e) + ": expected a list of " + expected + ", got '" + e.value + "'");
        out.clear();
        return false;
      }
      out.push_back(v);
    }
    if (out.empty()) problems_.push_back(where(e) + ": empty list");
    return !out.empty();
  }

  void fail(const Entry& e, const std::string& message) { problems_.push_back(where(e) + ": " + message); }

 private:
  std::vector<std::string>& problems_;
};

std::string resolve_path(const std::string& value, const fs::path& base_dir) {
  fs::path p(value);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return p.lexically_normal().string();
}

PartitionSource::Shape parse_shape(const std::string& text) {
  if (text == "halfspace") return PartitionSource::Shape::halfspace;
  if (text == "laminate") return PartitionSource::Shape::laminate;
  if (text == "file") return PartitionSource::Shape::file;
  if (text == "random") return PartitionSource::Shape::random;
  throw std::invalid_argument("unknown shape '" + text + "' (expected halfspace, laminate, file or random)");
}

std::string shape_name(PartitionSource::Shape shape) {
  switch (shape) {
    case PartitionSource::Shape::halfspace: return "halfspace";
    case PartitionSource::Shape::laminate: return "laminate";
    case PartitionSource::Shape::file: return "file";
    case PartitionSource::Shape::random: return "random";
  }
  return "halfspace";
}

int effective_axis(const ExperimentConfig& c) { return c.partition.axis == 0 ? c.grid.n : c.partition.axis; }

bool uses_partition(ExperimentKind k) {
  return k == ExperimentKind::energy || k == ExperimentKind::mincut_replace || k == ExperimentKind::minimize ||
         k == ExperimentKind::gamma_scan;
}

bool uses_scan(ExperimentKind k) { return k == ExperimentKind::gamma_scan || k == ExperimentKind::wetting; }

bool uses_pair(ExperimentKind k) {
  return k == ExperimentKind::mincut_replace || k == ExperimentKind::wetting || k == ExperimentKind::gamma_bar;
}

bool uses_minimize(ExperimentKind k) {
  return k == ExperimentKind::minimize || k == ExperimentKind::wetting || k == ExperimentKind::gamma_bar;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

GridPartition build_partition(const ExperimentConfig& c) {
  const int m = static_cast<int>(c.sigma.size());
  const PartitionSource& src = c.partition;
  switch (src.shape) {
    case PartitionSource::Shape::halfspace:
      return make_halfspace_pair(c.grid, m, src.upper, src.lower, effective_axis(c));
    case PartitionSource::Shape::laminate:
      return make_laminate(c.grid, m, LaminatePath{src.path, src.stage}, effective_axis(c));
    case PartitionSource::Shape::file: {
      GridPartition p = load_partition(src.file);
      if (!(p.spec() == c.grid)) throw std::invalid_argument("partition file grid differs from [grid]");
      if (p.chambers() != m) throw std::invalid_argument("partition file chamber count differs from the matrix size");
      return p;
    }
    case PartitionSource::Shape::random: {
      const ExteriorRule rule = src.exterior.empty()
                                    ? ExteriorRule::halfspace_pair(src.upper, src.lower, effective_axis(c))
                                    : ExteriorRule::parse(src.exterior);
      std::mt19937_64 rng(src.seed);
      std::vector<Label> labels(c.grid.cell_count());
      for (auto& l : labels) l = static_cast<Label>(1 + rng() % static_cast<std::uint64_t>(m));
      return GridPartition(c.grid, m, rule, std::move(labels));
    }
  }
  throw std::logic_error("unhandled partition shape");
}

PartitionShape scan_shape(const ExperimentConfig& c) {
  PartitionShape shape;
  shape.chambers = static_cast<int>(c.sigma.size());
  shape.axis = effective_axis(c);
  if (c.partition.shape == PartitionSource::Shape::halfspace)
    shape.path = LaminatePath{{c.partition.upper, c.partition.lower}, 0};
  else
    shape.path = LaminatePath{c.partition.path, c.partition.stage};
  return shape;
}

template <class Fn>
void check(std::vector<std::string>& problems, const std::string& field, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    problems.push_back(field + ": " + e.what());
  }
}

std::string energy_csv(const EnergyReport& r, double classical) {
  std::ostringstream out;
  out << "internal,boundary,total,scaled_total,tail_bound,classical\n"
      << format_number(r.internal) << ',' << format_number(r.boundary) << ',' << format_number(r.total) << ','
      << format_number(r.scaled_total) << ',' << format_number(r.tail_bound) << ',' << format_number(classical) << '\n';
  return out.str();
}

template <class Writer>
std::string capture(Writer&& write) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  write(out);
  return out.str();
}

OutputFiles run_relax(const ExperimentConfig& c) {
  const SurfaceTensionMatrix bar = relax(c.sigma);
  OutputFiles files;
  files["sigma_bar.txt"] = capture([&](std::ostream& o) { write_matrix(o, bar); });
  std::ostringstream csv;
  csv << "i,j,sigma,sigma_bar,path\n";
  const auto m = static_cast<Label>(c.sigma.size());
  for (Label a = 1; a <= m; ++a)
    for (Label b = a + 1; b <= m; ++b) {
      const auto path = relaxation_path(c.sigma, a, b);
      std::string joined;
      for (Label v : path) joined += (joined.empty() ? "" : "-") + std::to_string(v);
      csv << a << ',' << b << ',' << format_number(c.sigma.between(a, b)) << ',' << format_number(bar.between(a, b))
          << ',' << joined << '\n';
    }
  files["relax.csv"] = csv.str();
  return files;
}

OutputFiles run_energy(const ExperimentConfig& c) {
  const GridPartition p = build_partition(c);
  const InteractionEngine engine(c.grid, c.kernel, p.exterior());
  const PairInteractions pairs = engine.pair_interactions(p);
  OutputFiles files;
  files["energy.csv"] = energy_csv(engine.report(pairs, c.sigma), perimeter_classical(p, c.sigma));
  std::ostringstream csv;
  csv << "a,b,internal,boundary,total\n";
  for (Label a = 1; a <= pairs.m; ++a)
    for (Label b = a + 1; b <= pairs.m; ++b)
      csv << a << ',' << b << ',' << format_number(pairs.internal_at(a, b)) << ','
          << format_number(pairs.boundary_at(a, b)) << ',' << format_number(pairs.total_at(a, b)) << '\n';
  files["pairs.csv"] = csv.str();
  files["partition.txt"] = serialize(p);
  return files;
}

OutputFiles run_gamma_scan(const ExperimentConfig& c) {
  const auto rows = gamma_scan(scan_shape(c), c.sigma, c.grid.n, c.grid.side, c.s_values, c.refinements, c.kernel);
  return {{"gamma_scan.csv", capture([&](std::ostream& o) { write_gamma_scan_csv(o, rows); })}};
}

OutputFiles run_mincut_replace(const ExperimentConfig& c) {
  const GridPartition p = build_partition(c);
  const Replacement r = replace_detailed(p, c.i, c.j, c.kernel);
  const Flow flow = max_flow(r.network, c.i, c.j);
  validate_flow(r.network, flow);
  const PathDecomposition paths = decompose_flow(r.network, flow);
  const double before = multiphase_energy(p, c.sigma, c.kernel).total;
  const double after = multiphase_energy(r.partition, c.sigma, c.kernel).total;
  OutputFiles files;
  files["input.txt"] = serialize(p);
  files["replaced.txt"] = serialize(r.partition);
  files["network.txt"] = capture([&](std::ostream& o) { write_network(o, r.network); });
  files["flow.csv"] = capture([&](std::ostream& o) { write_flow(o, flow); });
  files["cut.csv"] = capture([&](std::ostream& o) { write_cut(o, r.network, r.cut, c.i, c.j); });
  files["paths.csv"] = capture([&](std::ostream& o) { write_paths(o, paths); });
  std::ostringstream csv;
  csv << "energy_before,energy_after,cut_size,flow_value\n"
      << format_number(before) << ',' << format_number(after) << ',' << format_number(cut_size(r.network, r.cut)) << ','
      << format_number(flow.value()) << '\n';
  files["replace.csv"] = csv.str();
  return files;
}

OutputFiles run_minimize(const ExperimentConfig& c) {
  const GridPartition start = build_partition(c);
  const InteractionEngine engine(c.grid, c.kernel, start.exterior());
  const SearchResult r = local_search(engine, start, c.sigma, c.minimize);
  OutputFiles files;
  files["start.txt"] = serialize(start);
  files["final.txt"] = serialize(r.partition);
  files["sweep_log.csv"] = capture([&](std::ostream& o) { write_sweep_log(o, r.log); });
  files["energy.csv"] = energy_csv(r.report, perimeter_classical(r.partition, c.sigma));
  return files;
}

// Shortest round-trip form, for file names.
std::string short_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

OutputFiles run_wetting(const ExperimentConfig& c) {
  const WettingResult r =
      wetting_experiment(c.sigma, c.i, c.j, c.grid.n, c.grid.side, c.s_values, c.refinements, c.kernel, c.minimize);
  OutputFiles files;
  files["wetting.csv"] = capture([&](std::ostream& o) { write_wetting_csv(o, r.rows); });
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    const std::string tag = "s" + short_number(r.rows[k].s) + "_N" + std::to_string(r.rows[k].cells_per_side);
    files["minimizer_" + tag + ".txt"] = serialize(r.minimizers[k]);
    files["sweep_log_" + tag + ".csv"] = capture([&](std::ostream& o) { write_sweep_log(o, r.logs[k]); });
  }
  return files;
}

OutputFiles run_gamma_bar(const ExperimentConfig& c) {
  const int m = static_cast<int>(c.sigma.size());
  const GridPartition flat = make_halfspace_pair(c.grid, m, c.i, c.j, c.grid.n);
  const InteractionEngine engine(c.grid, c.kernel, flat.exterior());
  const GammaBarEstimate g = gamma_bar_estimate(engine, m, c.i, c.j, c.sigma, c.minimize, c.restarts);
  std::ostringstream restarts;
  restarts << "restart,value\n";
  for (std::size_t r = 0; r < g.per_restart.size(); ++r) restarts << r << ',' << format_number(g.per_restart[r]) << '\n';
  std::ostringstream summary;
  summary << "best,halfspace,gap\n"
          << format_number(g.best) << ',' << format_number(g.halfspace) << ',' << format_number(g.gap) << '\n';
  return {{"gamma_bar_restarts.csv", restarts.str()},
          {"gamma_bar.csv", summary.str()},
          {"best.txt", serialize(g.partition)}};
}

std::vector<std::vector<std::string>> split_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

// Line number of a "line N: ..." problem; problems without one sort last.
int line_of(const std::string& problem) {
  int line = 0;
  if (problem.rfind("line ", 0) != 0) return std::numeric_limits<int>::max();
  const auto colon = problem.find(':');
  parse_value(problem.substr(5, colon - 5), line);
  return line;
}

bool parse_number(const std::string& text, double& out) {
  if (text == "nan") {
    out = std::numeric_limits<double>::quiet_NaN();
    return true;
  }
  if (text == "inf" || text == "-inf") {
    out = text[0] == '-' ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    return true;
  }
  return parse_value(text, out);
}

}  // namespace

std::string version() { return FRACPERIM_VERSION; }

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error([&] {
        std::string msg = "invalid configuration";
        for (const auto& p : problems) msg += "\n  " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

ExperimentKind parse_kind(const std::string& text) {
  if (text == "relax") return ExperimentKind::relax;
  if (text == "energy") return ExperimentKind::energy;
  if (text == "gamma-scan") return ExperimentKind::gamma_scan;
  if (text == "mincut-replace") return ExperimentKind::mincut_replace;
  if (text == "minimize") return ExperimentKind::minimize;
  if (text == "wetting") return ExperimentKind::wetting;
  if (text == "gamma-bar") return ExperimentKind::gamma_bar;
  throw std::invalid_argument("unknown experiment kind '" + text + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::relax: return "relax";
    case ExperimentKind::energy: return "energy";
    case ExperimentKind::gamma_scan: return "gamma-scan";
    case ExperimentKind::mincut_replace: return "mincut-replace";
    case ExperimentKind::minimize: return "minimize";
    case ExperimentKind::wetting: return "wetting";
    case ExperimentKind::gamma_bar: return "gamma-bar";
  }
  return "energy";
}

std::vector<std::string> kind_names() {
  return {"relax", "energy", "gamma-scan", "mincut-replace", "minimize", "wetting", "gamma-bar"};
}

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir,
                              std::optional<ExperimentKind> fallback_kind) {
  std::vector<std::string> problems;
  std::vector<Entry> entries;
  std::istringstream in(text);
  std::string section;
  int line_no = 0;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') {
        problems.push_back(where + ": unterminated section header '" + line + "'");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      if (!known_keys().count(section) || section.empty()) problems.push_back(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back(where + ": expected 'key = value', got '" + line + "'");
      continue;
    }
    Entry e{section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    const auto keys = known_keys().find(section);
    if (keys == known_keys().end()) continue;  // already reported
    if (!keys->second.count(e.key)) {
      problems.push_back(where + ": unknown key '" + e.key + "'" + (section.empty() ? "" : " in [" + section + "]"));
      continue;
    }
    if (!(section == "sigma" && e.key == "row") && !seen.insert({section, e.key}).second) {
      problems.push_back(where + ": duplicate " + field_name(section, e.key));
      continue;
    }
    entries.push_back(std::move(e));
  }

  ExperimentConfig c;
  EntryReader read(problems);
  bool have_kind = false;
  std::vector<std::vector<double>> rows;
  for (const Entry& e : entries) {
    const std::string& s = e.section;
    const std::string& k = e.key;
    try {
      if (s.empty() && k == "kind") {
        c.kind = parse_kind(e.value);
        have_kind = true;
      } else if (s.empty() && k == "output") {
        c.output_dir = resolve_path(e.value, base_dir);
      } else if (s == "grid" && k == "n") {
        read.number(e, c.grid.n, "an integer");
      } else if (s == "grid" && k == "N") {
        read.number(e, c.grid.cells_per_side, "an integer");
      } else if (s == "grid" && k == "L") {
        read.number(e, c.grid.side, "a number");
      } else if (s == "kernel" && k == "s") {
        read.number(e, c.kernel.s, "a number");
      } else if (s == "kernel" && k == "D") {
        read.number(e, c.kernel.max_depth, "an integer");
      } else if (s == "kernel" && k == "R_t") {
        read.number(e, c.kernel.trunc_radius, "a number");
      } else if (s == "sigma" && k == "file") {
        c.sigma_file = resolve_path(e.value, base_dir);
      } else if (s == "sigma" && k == "row") {
        std::vector<double> row;
        if (read.list(e, row, "numbers")) rows.push_back(std::move(row));
      } else if (s == "partition" && k == "shape") {
        c.partition.shape = parse_shape(e.value);
      } else if (s == "partition" && k == "file") {
        c.partition.file = resolve_path(e.value, base_dir);
      } else if (s == "partition" && k == "upper") {
        read.number(e, c.partition.upper, "a chamber label");
      } else if (s == "partition" && k == "lower") {
        read.number(e, c.partition.lower, "a chamber label");
      } else if (s == "partition" && k == "axis") {
        read.number(e, c.partition.axis, "an axis number");
      } else if (s == "partition" && k == "path") {
        read.list(e, c.partition.path, "chamber labels");
      } else if (s == "partition" && k == "stage") {
        read.number(e, c.partition.stage, "an integer");
      } else if (s == "partition" && k == "seed") {
        read.number(e, c.partition.seed, "an unsigned integer");
      } else if (s == "partition" && k == "exterior") {
        ExteriorRule::parse(e.value);
        c.partition.exterior = e.value;
      } else if (s == "scan" && k == "s") {
        read.list(e, c.s_values, "numbers");
      } else if (s == "scan" && k == "N") {
        read.list(e, c.refinements, "integers");
      } else if (s == "minimize" && k == "strategy") {
        c.minimize.strategy = MinimizeConfig::parse_strategy(e.value);
      } else if (s == "minimize" && k == "max_sweeps") {
        read.number(e, c.minimize.max_sweeps, "an integer");
      } else if (s == "minimize" && k == "T0") {
        read.number(e, c.minimize.initial_temperature, "a number");
      } else if (s == "minimize" && k == "decay") {
        read.number(e, c.minimize.decay, "a number");
      } else if (s == "minimize" && k == "seed") {
        read.number(e, c.minimize.seed, "an unsigned integer");
      } else if (s == "minimize" && k == "restarts") {
        read.number(e, c.restarts, "an integer");
      } else if (s == "pair" && k == "i") {
        read.number(e, c.i, "a chamber label");
      } else if (s == "pair" && k == "j") {
        read.number(e, c.j, "a chamber label");
      }
    } catch (const std::exception& ex) {
      read.fail(e, ex.what());
    }
  }
  if (!have_kind) {
    if (fallback_kind)
      c.kind = *fallback_kind;
    else
      problems.push_back("kind: missing (expected one of relax, energy, gamma-scan, mincut-replace, minimize, wetting, gamma-bar)");
  }
  if (!rows.empty()) {
    if (!c.sigma_file.empty()) problems.push_back("[sigma]: give either file or row entries, not both");
    try {
      c.sigma = SurfaceTensionMatrix::from_rows(rows);
    } catch (const std::exception& ex) {
      problems.push_back(std::string("[sigma] row: ") + ex.what());
    }
  }
  std::stable_sort(problems.begin(), problems.end(), [](const std::string& a, const std::string& b) {
    return line_of(a) < line_of(b);
  });
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

ExperimentConfig load_config(const fs::path& path, std::optional<ExperimentKind> fallback_kind) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError({std::string("config: ") + e.what()});
  }
  return parse_config(text, path.parent_path(), fallback_kind);
}

void resolve(ExperimentConfig& c) {
  std::vector<std::string> problems;
  if (!c.sigma_file.empty()) {
    if (!fs::exists(c.sigma_file))
      problems.push_back("[sigma] file: '" + c.sigma_file + "' does not exist");
    else
      check(problems, "[sigma] file", [&] { c.sigma = load_matrix(c.sigma_file); });
  }
  if (c.sigma.size() == 0 && problems.empty()) problems.push_back("[sigma]: missing matrix (give file or row entries)");
  if (!problems.empty()) throw ConfigError(std::move(problems));
  if (validate(c.sigma)) {
    check(problems, "[sigma]", [&] { require_valid(c.sigma); });
    throw ConfigError(std::move(problems));
  }
  const int m = static_cast<int>(c.sigma.size());
  const ExperimentKind kind = c.kind;

  if (kind != ExperimentKind::relax) {
    if (uses_scan(kind)) {
      if (c.s_values.empty()) problems.push_back("[scan] s: missing");
      if (c.refinements.empty()) problems.push_back("[scan] N: missing");
      if (!std::is_sorted(c.s_values.begin(), c.s_values.end()) ||
          std::adjacent_find(c.s_values.begin(), c.s_values.end()) != c.s_values.end())
        problems.push_back("[scan] s: values must be strictly increasing");
      if (!std::is_sorted(c.refinements.begin(), c.refinements.end()) ||
          std::adjacent_find(c.refinements.begin(), c.refinements.end()) != c.refinements.end())
        problems.push_back("[scan] N: values must be strictly increasing");
      for (int N : c.refinements)
        for (double s : c.s_values) {
          const GridSpec spec{c.grid.n, N, c.grid.side};
          KernelConfig k = c.kernel;
          k.s = s;
          check(problems, "[scan] N=" + std::to_string(N) + " s=" + format_number(s), [&] {
            spec.validate();
            k.validate(spec);
          });
        }
    } else {
      check(problems, "[grid]", [&] { c.grid.validate(); });
      check(problems, "[kernel]", [&] { c.kernel.validate(c.grid); });
    }
  }

  if (uses_pair(kind) && (c.i < 1 || c.i > m || c.j < 1 || c.j > m || c.i == c.j))
    problems.push_back("[pair]: i and j must be distinct labels in 1.." + std::to_string(m));

  if (uses_minimize(kind)) {
    check(problems, "[minimize]", [&] { c.minimize.validate(); });
    if (c.restarts < 1) problems.push_back("[minimize] restarts: must be >= 1");
  }

  if (kind == ExperimentKind::wetting && problems.empty() && !(relax(c.sigma).between(c.i, c.j) < c.sigma.between(c.i, c.j)))
    problems.push_back("[sigma]: wetting needs a matrix violating the triangle inequality on the pair (i, j)");
  if (kind == ExperimentKind::gamma_bar && !check_triangle(c.sigma))
    problems.push_back("[sigma]: gamma-bar needs a matrix satisfying the triangle inequality");

  if (uses_partition(kind) && problems.empty()) {
    const auto& src = c.partition;
    if (kind == ExperimentKind::gamma_scan && src.shape != PartitionSource::Shape::halfspace &&
        src.shape != PartitionSource::Shape::laminate)
      problems.push_back("[partition] shape: gamma-scan supports halfspace or laminate");
    if (src.shape == PartitionSource::Shape::file) {
      if (src.file.empty())
        problems.push_back("[partition] file: missing");
      else if (!fs::exists(src.file))
        problems.push_back("[partition] file: '" + src.file + "' does not exist");
    }
    if (src.shape == PartitionSource::Shape::laminate && src.path.size() < 2)
      problems.push_back("[partition] path: laminate needs at least two chambers");
    if (problems.empty()) {
      if (kind == ExperimentKind::gamma_scan) {
        for (int N : c.refinements)
          check(problems, "[partition]", [&] { scan_shape(c).rasterize(GridSpec{c.grid.n, N, c.grid.side}); });
      } else {
        check(problems, "[partition]", [&] {
          const GridPartition p = build_partition(c);
          if (kind == ExperimentKind::mincut_replace) {
            const ExteriorRule& r = p.exterior();
            if (r.kind != ExteriorRule::Kind::halfspace_pair || r.upper != c.i || r.lower != c.j)
              throw std::invalid_argument("mincut-replace needs the exterior halfpair:" + std::to_string(c.i) + "," +
                                          std::to_string(c.j));
          }
        });
      }
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  auto list = [](const auto& values) {
    std::string s;
    for (const auto& v : values) {
      if (!s.empty()) s += ' ';
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>)
        s += format_number(v);
      else
        s += std::to_string(v);
    }
    return s;
  };
  out << "kind = " << to_string(c.kind) << "\n\n";
  out << "[grid]\nn = " << c.grid.n << "\nN = " << c.grid.cells_per_side << "\nL = " << format_number(c.grid.side) << "\n\n";
  out << "[kernel]\ns = " << format_number(c.kernel.s) << "\nD = " << c.kernel.max_depth
      << "\nR_t = " << format_number(c.kernel.trunc_radius) << "\n\n";
  out << "[sigma]\n";
  for (std::size_t r = 0; r < c.sigma.size(); ++r) {
    std::vector<double> row;
    for (std::size_t k = 0; k < c.sigma.size(); ++k) row.push_back(c.sigma(r, k));
    out << "row = " << list(row) << '\n';
  }
  const auto& p = c.partition;
  out << "\n[partition]\nshape = " << shape_name(p.shape) << "\nupper = " << p.upper << "\nlower = " << p.lower
      << "\naxis = " << p.axis << "\nstage = " << p.stage << "\nseed = " << p.seed << '\n';
  if (!p.path.empty()) out << "path = " << list(p.path) << '\n';
  if (!p.file.empty()) out << "file = " << p.file << '\n';
  if (!p.exterior.empty()) out << "exterior = " << p.exterior << '\n';
  if (!c.s_values.empty() || !c.refinements.empty()) {
    out << "\n[scan]\n";
    if (!c.s_values.empty()) out << "s = " << list(c.s_values) << '\n';
    if (!c.refinements.empty()) out << "N = " << list(c.refinements) << '\n';
  }
  out << "\n[minimize]\nstrategy = " << MinimizeConfig::to_string(c.minimize.strategy)
      << "\nmax_sweeps = " << c.minimize.max_sweeps << "\nT0 = " << format_number(c.minimize.initial_temperature)
      << "\ndecay = " << format_number(c.minimize.decay) << "\nseed = " << c.minimize.seed
      << "\nrestarts = " << c.restarts << "\n\n";
  out << "[pair]\ni = " << c.i << "\nj = " << c.j << '\n';
  return out.str();
}

OutputFiles run_in_memory(const ExperimentConfig& c) {
  try {
    switch (c.kind) {
      case ExperimentKind::relax: return run_relax(c);
      case ExperimentKind::energy: return run_energy(c);
      case ExperimentKind::gamma_scan: return run_gamma_scan(c);
      case ExperimentKind::mincut_replace: return run_mincut_replace(c);
      case ExperimentKind::minimize: return run_minimize(c);
      case ExperimentKind::wetting: return run_wetting(c);
      case ExperimentKind::gamma_bar: return run_gamma_bar(c);
    }
  } catch (const std::exception& e) {
    throw ModuleError(to_string(c.kind) + ": " + e.what());
  }
  throw std::logic_error("unhandled experiment kind");
}

RunSummary run(ExperimentConfig config) {
  resolve(config);
  if (config.output_dir.empty()) throw ConfigError({"output: missing output directory"});
  const OutputFiles files = run_in_memory(config);

  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  RunSummary summary{dir, {}};
  Manifest manifest;
  manifest.version = version();
  manifest.kind = config.kind;
  manifest.threads = thread_limit();
  manifest.config_text = to_text(config);
  manifest.config_hash = config_hash(manifest.config_text);
  for (const auto& [name, contents] : files) {
    std::ofstream out(dir / name, std::ios::binary);
    out << contents;
    if (!out) throw ModuleError("cannot write " + (dir / name).string());
    manifest.outputs.push_back(name);
    summary.files.push_back(name);
  }
  std::ofstream out(dir / kManifestName, std::ios::binary);
  out << write_manifest(manifest);
  if (!out) throw ModuleError("cannot write " + (dir / kManifestName).string());
  summary.files.emplace_back(kManifestName);
  return summary;
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string write_manifest(const Manifest& m) {
  std::ostringstream out;
  out << kManifestMagic << "\nversion = " << m.version << "\nkind = " << to_string(m.kind) << "\nthreads = " << m.threads
      << "\nconfig_hash = " << m.config_hash << '\n';
  for (const auto& f : m.outputs) out << "output = " << f << '\n';
  out << kConfigMarker << '\n' << m.config_text;
  return out.str();
}

Manifest parse_manifest(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kManifestMagic) throw std::runtime_error("not a fracperim manifest");
  Manifest m;
  bool have_kind = false;
  while (std::getline(in, line)) {
    if (trim(line) == kConfigMarker) {
      std::ostringstream rest;
      rest << in.rdbuf();
      m.config_text = rest.str();
      if (!have_kind) throw std::runtime_error("manifest has no kind");
      return m;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("bad manifest line '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "version") {
      m.version = value;
    } else if (key == "kind") {
      m.kind = parse_kind(value);
      have_kind = true;
    } else if (key == "threads") {
      if (!parse_value(value, m.threads)) throw std::runtime_error("bad manifest thread count '" + value + "'");
    } else if (key == "config_hash") {
      m.config_hash = value;
    } else if (key == "output") {
      const fs::path p(value);
      if (p.has_parent_path() || p.is_absolute()) throw std::runtime_error("manifest output '" + value + "' is not a plain file name");
      m.outputs.push_back(value);
    } else {
      throw std::runtime_error("unknown manifest key '" + key + "'");
    }
  }
  throw std::runtime_error("manifest has no config section");
}

std::vector<ColumnDeviation> compare_csv(const std::string& file, const std::string& expected, const std::string& actual) {
  const auto a = split_csv(expected);
  const auto b = split_csv(actual);
  std::vector<ColumnDeviation> out;
  if (a.empty() || b.empty() || a.front() != b.front()) {
    out.push_back({file, "*", 0.0, 0.0, expected == actual ? 0U : 1U});
    return out;
  }
  const auto& header = a.front();
  for (const auto& name : header) out.push_back({file, name, 0.0, 0.0, 0});
  const std::size_t rows = std::max(a.size(), b.size());
  if (a.size() != b.size()) out.push_back({file, "*", 0.0, 0.0, rows - std::min(a.size(), b.size())});
  for (std::size_t r = 1; r < std::min(a.size(), b.size()); ++r) {
    for (std::size_t col = 0; col < header.size(); ++col) {
      const std::string x = col < a[r].size() ? a[r][col] : std::string();
      const std::string y = col < b[r].size() ? b[r][col] : std::string();
      if (x == y) continue;
      double u = 0.0;
      double v = 0.0;
      auto& dev = out[col];
      if (parse_number(x, u) && parse_number(y, v)) {
        const double diff = std::abs(u - v);
        const double scale = std::max(std::abs(u), std::abs(v));
        dev.max_abs = std::max(dev.max_abs, std::isnan(diff) ? INFINITY : diff);
        dev.max_rel = std::max(dev.max_rel, scale > 0.0 ? diff / scale : 0.0);
      } else {
        ++dev.mismatched;
      }
    }
  }
  return out;
}

double VerifyReport::max_abs() const {
  double v = 0.0;
  for (const auto& c : columns) v = std::max(v, c.max_abs);
  return v;
}

double VerifyReport::max_rel() const {
  double v = 0.0;
  for (const auto& c : columns) v = std::max(v, c.max_rel);
  return v;
}

bool VerifyReport::identical() const {
  return std::all_of(columns.begin(), columns.end(),
                     [](const ColumnDeviation& c) { return c.max_abs == 0.0 && c.max_rel == 0.0 && c.mismatched == 0; });
}

VerifyReport verify(const fs::path& manifest_path, const fs::path& alternate_config) {
  const Manifest manifest = parse_manifest(read_file(manifest_path));
  const fs::path dir = manifest_path.parent_path();
  VerifyReport report;
  if (manifest.version != version()) {
    report.version_mismatch = true;
    report.notes.push_back("manifest written by version " + manifest.version + ", running " + version());
  }
  if (config_hash(manifest.config_text) != manifest.config_hash) {
    report.config_mismatch = true;
    report.notes.push_back("recorded configuration was modified after the run");
  }
  ExperimentConfig config = alternate_config.empty() ? parse_config(manifest.config_text, dir, manifest.kind)
                                                     : load_config(alternate_config, manifest.kind);
  resolve(config);
  if (!alternate_config.empty() && to_text(config) != manifest.config_text) {
    report.config_mismatch = true;
    report.notes.push_back("configuration " + alternate_config.string() + " differs from the recorded one");
  }
  if (config.kind != manifest.kind) {
    report.config_mismatch = true;
    report.notes.push_back("experiment kind differs from the manifest");
  }
  const OutputFiles fresh = run_in_memory(config);
  for (const auto& name : manifest.outputs) {
    std::string stored;
    try {
      stored = read_file(dir / name);
    } catch (const std::exception&) {
      report.notes.push_back("recorded output " + name + " is missing");
      report.columns.push_back({name, "*", 0.0, 0.0, 1});
      continue;
    }
    const auto it = fresh.find(name);
    if (it == fresh.end()) {
      report.notes.push_back("re-run did not produce " + name);
      report.columns.push_back({name, "*", 0.0, 0.0, 1});
      continue;
    }
    if (fs::path(name).extension() == ".csv") {
      for (auto& col : compare_csv(name, stored, it->second)) report.columns.push_back(std::move(col));
    } else {
      report.columns.push_back({name, "*", 0.0, 0.0, stored == it->second ? 0U : 1U});
    }
  }
  for (const auto& [name, contents] : fresh)
    if (std::find(manifest.outputs.begin(), manifest.outputs.end(), name) == manifest.outputs.end()) {
      report.notes.push_back("re-run produced unrecorded output " + name);
      report.columns.push_back({name, "*", 0.0, 0.0, 1});
    }
  return report;
}

void write_verify_report(std::ostream& out, const VerifyReport& report) {
  out << "version: " << (report.version_mismatch ? "MISMATCH" : "ok") << '\n';
  out << "config: " << (report.config_mismatch ? "MISMATCH" : "ok") << '\n';
  for (const auto& note : report.notes) out << "note: " << note << '\n';
  out << "file,column,max_abs,max_rel,mismatched\n";
  for (const auto& c : report.columns)
    out << c.file << ',' << c.column << ',' << format_number(c.max_abs) << ',' << format_number(c.max_rel) << ','
        << c.mismatched << '\n';
  out << "result: " << (report.identical() ? "identical" : "DIFFERENT") << " (max_abs " << format_number(report.max_abs())
      << ", max_rel " << format_number(report.max_rel()) << ")\n";
}

}  // namespace fracperim
