// isospec: batch front end for the spectral perturbation experiments.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "isospec/cli.hpp"

namespace {

using isospec::cli::ExperimentConfig;

struct Overrides {
  std::string config;
  std::optional<std::string> out;
  std::optional<long long> modes;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "JSON experiment configuration")->check(CLI::ExistingFile);
  sub->add_option("--out", o.out, "output directory (overrides output.dir)");
  sub->add_option("--modes", o.modes, "number of modes (overrides solver.n_modes)");
  sub->add_option("--seed", o.seed, "random seed (overrides seed)");
}

int run_subcommand(isospec::cli::Experiment e, const Overrides& o) {
  using namespace isospec::cli;
  ExperimentConfig c;
  try {
    if (!o.config.empty()) c = load_config(o.config);
    if (c.experiment && *c.experiment != e)
      throw isospec::Error(isospec::ErrorKind::Config, std::string("config selects experiment '") +
                                                           to_string(*c.experiment) + "' but subcommand is '" +
                                                           to_string(e) + "'");
    c.experiment = e;
    if (o.out) c.out_dir = *o.out;
    if (o.modes) {
      if (*o.modes < 1) throw isospec::Error(isospec::ErrorKind::Config, "--modes must be >= 1");
      c.n_modes = static_cast<Eigen::Index>(*o.modes);
    }
    if (o.seed) c.seed = *o.seed;
  } catch (const isospec::Error& err) {
    std::cerr << detail::error_record(err, kExitConfig).dump() << '\n';
    return kExitConfig;
  }
  const RunResult r = run(c);
  if (r.exit_code == kExitOk) {
    for (const auto& a : r.artifacts) log(LogLevel::Info, "wrote " + a);
    std::cout << c.out_dir << '\n';
  }
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  using isospec::cli::Experiment;
  CLI::App app{"Spectral perturbation experiments for conformal deformations of discrete surfaces"};
  app.set_version_flag("--version", isospec::cli::kVersion);
  app.require_subcommand(1);

  Overrides o;
  const std::pair<const char*, Experiment> experiments[] = {
      {"spectrum", Experiment::Spectrum},       {"corrections", Experiment::Corrections},
      {"obstruction", Experiment::Obstruction}, {"convexity", Experiment::Convexity},
      {"metric-probe", Experiment::MetricProbe}, {"weyl", Experiment::Weyl}};
  std::optional<Experiment> chosen;
  for (const auto& [name, e] : experiments) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    add_common(sub, o);
    sub->callback([&chosen, e = e] { chosen = e; });
  }
  std::string data_dir;
  CLI::App* self = app.add_subcommand("selftest", "run the reduced acceptance suite");
  self->add_option("--data", data_dir, "directory holding the bundled meshes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : isospec::cli::kExitConfig;
  }
  if (self->parsed()) return isospec::cli::selftest(std::cout, data_dir);
  return run_subcommand(*chosen, o);
}
