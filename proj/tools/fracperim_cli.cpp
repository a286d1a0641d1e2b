#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fracperim/lab.hpp"
#include "fracperim/parallel.hpp"

namespace {

constexpr int kExitDifferent = 1;
constexpr int kExitConfig = 2;
constexpr int kExitModule = 3;

struct RunOptions {
  std::string config;
  std::string out;
  int threads = 0;
  std::optional<std::uint64_t> seed;
};

void add_run_options(CLI::App& cmd, RunOptions& opts) {
  cmd.add_option("--config", opts.config, "experiment configuration file")->required()->check(CLI::ExistingFile);
  cmd.add_option("--out", opts.out, "output directory (overrides the config)");
  cmd.add_option("--threads", opts.threads, "worker thread cap")->check(CLI::PositiveNumber);
  cmd.add_option("--seed", opts.seed, "random seed (overrides the config)");
}

int run_experiment(const RunOptions& opts, std::optional<fracperim::ExperimentKind> kind) {
  using namespace fracperim;
  try {
    if (opts.threads > 0) set_thread_limit(opts.threads);
    ExperimentConfig config = load_config(opts.config, kind);
    if (kind && config.kind != *kind)
      throw ConfigError({"kind: config declares '" + to_string(config.kind) + "' but the subcommand is '" +
                         to_string(*kind) + "'"});
    if (!opts.out.empty()) config.output_dir = opts.out;
    if (opts.seed) {
      config.minimize.seed = *opts.seed;
      config.partition.seed = *opts.seed;
    }
    const RunSummary summary = run(config);
    for (const auto& f : summary.files) std::cout << (summary.output_dir / f).string() << '\n';
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitModule;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional multiphase perimeter experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fracperim::version());

  RunOptions run_opts;
  auto* generic = app.add_subcommand("run", "run the experiment named by the config's kind");
  add_run_options(*generic, run_opts);
  std::optional<fracperim::ExperimentKind> chosen;
  for (const auto& name : fracperim::kind_names()) {
    auto* cmd = app.add_subcommand(name, "run a " + name + " experiment");
    add_run_options(*cmd, run_opts);
    cmd->callback([&chosen, name] { chosen = fracperim::parse_kind(name); });
  }

  std::string manifest;
  std::string alternate;
  int verify_threads = 0;
  auto* verify_cmd = app.add_subcommand("verify", "re-run a recorded experiment and compare its outputs");
  verify_cmd->add_option("manifest", manifest, "manifest.txt of a previous run")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--config", alternate, "run this configuration instead of the recorded one")
      ->check(CLI::ExistingFile);
  verify_cmd->add_option("--threads", verify_threads, "worker thread cap")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  if (verify_cmd->parsed()) {
    try {
      if (verify_threads > 0) fracperim::set_thread_limit(verify_threads);
      const auto report = fracperim::verify(manifest, alternate);
      fracperim::write_verify_report(std::cout, report);
      return report.identical() ? 0 : kExitDifferent;
    } catch (const fracperim::ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitModule;
    }
  }
  return run_experiment(run_opts, chosen);
}
