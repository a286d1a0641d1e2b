#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracperim/grid.hpp"
#include "fracperim/kernel.hpp"
#include "fracperim/minimize.hpp"
#include "fracperim/tensions.hpp"

namespace fracperim {

/// Library version string baked in at build time.
std::string version();

/// Invalid or incomplete configuration. `what()` lists every problem, one
/// per line, each prefixed with the line number or the offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Failure inside a module while running a validated experiment.
class ModuleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { relax, energy, gamma_scan, mincut_replace, minimize, wetting, gamma_bar };

ExperimentKind parse_kind(const std::string& text);
std::string to_string(ExperimentKind kind);
std::vector<std::string> kind_names();

/// How the starting partition of an experiment is produced.
struct PartitionSource {
  enum class Shape { halfspace, laminate, file, random };

  Shape shape = Shape::halfspace;
  Label upper = 1;
  Label lower = 2;
  int axis = 0;                // 0 selects the last axis
  std::vector<Label> path;     // laminate chambers i_0 .. i_H
  int stage = 0;               // laminate stage q
  std::string file;            // partition file for Shape::file
  std::uint64_t seed = 0;      // interior labels for Shape::random
  std::string exterior;        // rule text for Shape::random; empty means halfpair upper,lower
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::energy;
  GridSpec grid;
  KernelConfig kernel;
  SurfaceTensionMatrix sigma;  // filled by resolve() when given as a file
  std::string sigma_file;
  PartitionSource partition;
  std::vector<double> s_values;   // [scan] s
  std::vector<int> refinements;   // [scan] N
  MinimizeConfig minimize;
  int restarts = 1;
  Label i = 1;
  Label j = 2;
  std::string output_dir;
};

/// Parses the key=value format. Relative file paths are resolved against
/// `base_dir`. `fallback_kind` applies when the text has no `kind` line.
/// Throws ConfigError with line numbers.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {},
                              std::optional<ExperimentKind> fallback_kind = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<ExperimentKind> fallback_kind = std::nullopt);

/// Loads referenced files and checks every field against the module
/// preconditions for the chosen kind. Throws ConfigError naming fields.
void resolve(ExperimentConfig& config);

/// Canonical text of a resolved configuration; parse_config round-trips it.
std::string to_text(const ExperimentConfig& config);

/// Output file name -> contents.
using OutputFiles = std::map<std::string, std::string>;

/// Runs a resolved configuration without touching the file system beyond
/// reading inputs. Module failures surface as ModuleError.
OutputFiles run_in_memory(const ExperimentConfig& config);

struct RunSummary {
  std::filesystem::path output_dir;
  std::vector<std::string> files;  // written files, manifest last
};

/// Resolves, runs, then writes every output plus manifest.txt into
/// config.output_dir. Nothing is written when resolution fails.
RunSummary run(ExperimentConfig config);

struct Manifest {
  std::string version;
  ExperimentKind kind = ExperimentKind::energy;
  int threads = 0;
  std::string config_hash;
  std::vector<std::string> outputs;
  std::string config_text;
};

std::string config_hash(const std::string& text);
std::string write_manifest(const Manifest& manifest);
Manifest parse_manifest(const std::string& text);

struct ColumnDeviation {
  std::string file;
  std::string column;  // "*" for whole-file byte comparison
  double max_abs = 0.0;
  double max_rel = 0.0;
  std::size_t mismatched = 0;  // cells (or files) that differ and are not numeric
};

struct VerifyReport {
  bool version_mismatch = false;
  bool config_mismatch = false;
  std::vector<ColumnDeviation> columns;
  std::vector<std::string> notes;

  double max_abs() const;
  double max_rel() const;
  /// True when every output matched exactly; mismatch flags are not counted.
  bool identical() const;
};

/// Re-runs the manifest's configuration in memory and compares against the
/// stored outputs. A non-empty `alternate_config` is run instead and flagged
/// when it differs from the recorded one.
VerifyReport verify(const std::filesystem::path& manifest_path, const std::filesystem::path& alternate_config = {});

/// Per-column comparison of two CSV documents (header row required).
std::vector<ColumnDeviation> compare_csv(const std::string& file, const std::string& expected, const std::string& actual);

void write_verify_report(std::ostream& out, const VerifyReport& report);

}  // namespace fracperim
