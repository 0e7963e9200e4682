// Command-line driver: one subcommand per experiment kind.
//
//   coexsim <kind> [--config PATH] [--seed U64] [--replicas N] [--workers N]
//                  [--out DIR] [--set section.key=value ...]
//
// Precedence: --set and the dedicated flags, then COEXSIM_* environment
// variables, then the config file, then built-in defaults.
// Exit status: 0 success, 1 usage, 2 configuration error, 3 runtime error.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coexsim/harness.hpp"

extern char** environ;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
  std::vector<std::string> sets;
};

int run(const std::string& kind, const Flags& f) {
  using coexsim::ExitCode;
  try {
    coexsim::ConfigFile file;
    if (!f.config.empty()) file = coexsim::load_config(f.config);
    if (auto k = file.raw("kind"); k && *k != kind)
      throw coexsim::ConfigError("kind", "config file is for '" + *k + "', not '" + kind + "'");
    std::vector<std::string> env;
    for (char** e = environ; e && *e; ++e) env.emplace_back(*e);
    coexsim::apply_env_overrides(file, env);
    file.set("kind", kind);
    for (const auto& s : f.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw coexsim::ConfigError("--set", "expected key=value, got '" + s + "'");
      file.set(coexsim::ConfigFile::trim(s.substr(0, eq)), coexsim::ConfigFile::trim(s.substr(eq + 1)));
    }
    if (f.seed) file.set("run.seed", std::to_string(*f.seed));
    if (f.replicas) file.set("run.replicas", std::to_string(*f.replicas));
    if (f.workers) file.set("run.workers", std::to_string(*f.workers));
    if (f.out) file.set("run.out", *f.out);
    const auto cfg = coexsim::make_config(file);
    const auto res = coexsim::run_experiment(cfg);
    for (const auto& key : cfg.raw.unused()) std::cerr << "warning: unused config key " << key << '\n';
    for (const auto& path : coexsim::write_outputs(res, cfg.out_dir)) std::cout << path.string() << '\n';
    return static_cast<int>(ExitCode::ok);
  } catch (const coexsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::config_error);
  } catch (const coexsim::InvalidParameter& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::config_error);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::runtime_error);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-type competition on random geometric graphs: simulation experiments"};
  app.require_subcommand(1);
  Flags flags;
  std::string chosen;
  for (const auto& kind : coexsim::experiment_kinds()) {
    auto* sub = app.add_subcommand(kind, "Run the " + kind + " experiment");
    sub->add_option("--config", flags.config, "Configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Master seed");
    sub->add_option("--replicas", flags.replicas, "Replica count")->check(CLI::PositiveNumber);
    sub->add_option("--workers", flags.workers, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--set", flags.sets, "Override one key, section.key=value");
    sub->callback([&chosen, kind] { chosen = kind; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(coexsim::ExitCode::usage);
  }
  return run(chosen, flags);
}
