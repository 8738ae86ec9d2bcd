#pragma once

// Experiment configuration and the batch runner behind the `isospec` tool.

#include <Eigen/Core>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "isospec/acceptance.hpp"
#include "isospec/assembly.hpp"
#include "isospec/eigensolve.hpp"
#include "isospec/error.hpp"
#include "isospec/experiments.hpp"
#include "isospec/expression.hpp"
#include "isospec/fields.hpp"
#include "isospec/io.hpp"
#include "isospec/perturb.hpp"
#include "isospec/surface.hpp"

#ifndef ISOSPEC_DATA_DIR
#define ISOSPEC_DATA_DIR "data"
#endif

namespace isospec::cli {

inline constexpr const char* kVersion = "1.0.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

// ---------------------------------------------------------------------------
// Logging

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline LogLevel log_level_from_env() {
  const char* v = std::getenv("ISOSPEC_LOG");
  if (v == nullptr) return LogLevel::Warn;
  const std::string s(v);
  if (s == "error") return LogLevel::Error;
  if (s == "info") return LogLevel::Info;
  if (s == "debug" || s == "trace") return LogLevel::Debug;
  return LogLevel::Warn;
}

inline void log(LogLevel level, const std::string& msg) {
  static const LogLevel threshold = log_level_from_env();
  if (level > threshold) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "[isospec " << names[static_cast<int>(level)] << "] " << msg << '\n';
}

// ---------------------------------------------------------------------------
// Configuration

enum class Experiment { Spectrum, Corrections, Obstruction, Convexity, MetricProbe, Weyl };

inline const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::Spectrum: return "spectrum";
    case Experiment::Corrections: return "corrections";
    case Experiment::Obstruction: return "obstruction";
    case Experiment::Convexity: return "convexity";
    case Experiment::MetricProbe: return "metric-probe";
    case Experiment::Weyl: return "weyl";
  }
  return "?";
}

inline std::optional<Experiment> parse_experiment(const std::string& s) {
  for (Experiment e : {Experiment::Spectrum, Experiment::Corrections, Experiment::Obstruction, Experiment::Convexity,
                       Experiment::MetricProbe, Experiment::Weyl})
    if (s == to_string(e)) return e;
  return std::nullopt;
}

/// A field is either an expression in x, y, z (and Lx, Ly on tori) or a
/// seeded random smooth field with the given amplitude.
struct FieldSpec {
  std::string expression = "0";
  std::optional<double> random_amplitude;
};

struct ExperimentConfig {
  std::optional<Experiment> experiment;

  // surface
  bool torus = true;
  int nx = 32, ny = 32;
  double lx = 1.0, ly = 1.0;
  std::string mesh_path;  // resolved against the config file directory

  // perturbation
  PerturbationSide side = PerturbationSide::InverseMetric;
  FieldSpec f1{"cos(2*pi*x)", std::nullopt};
  std::optional<FieldSpec> f2;

  // solver
  Eigen::Index n_modes = 20;
  double tol_deg = kDefaultDegeneracyTolerance;
  Eigen::Index truncation = -1;  // modes in correction sums; -1 solves the full basis

  // obstruction
  std::string basis = "auto";  // auto | fourier | harmonic
  std::size_t basis_dim = 9;
  double kernel_tol = kDefaultKernelTolerance;

  // convexity
  FieldSpec c1{"1", std::nullopt};
  FieldSpec c2{"1 + 0.2*cos(2*pi*x)", std::nullopt};
  std::vector<double> tau_grid{0.0, 0.25, 0.5, 0.75, 1.0};

  // metric probe
  FieldSpec f{"cos(2*pi*x)", std::nullopt};
  std::vector<double> t_grid{1e-3, 1e-2, 5e-2, 1e-1};
  double series_tolerance = kDefaultSeriesTolerance;

  std::string out_dir = "isospec-out";
  std::uint64_t seed = 1;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

inline void reject_unknown(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) config_error(where + " must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) config_error("unknown key '" + key + "' in " + where);
}

template <class T>
T get(const Json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    config_error("invalid value for '" + key + "' in " + where);
  }
}

inline FieldSpec parse_field(const Json& v, const std::string& where) {
  FieldSpec f;
  if (v.is_string()) {
    f.expression = v.get<std::string>();
  } else if (v.is_number()) {
    f.expression = v.dump();
  } else if (v.is_object()) {
    reject_unknown(v, where, {"random_amplitude"});
    f.random_amplitude = get<double>(v, "random_amplitude", where);
    if (!(*f.random_amplitude >= 0.0 && *f.random_amplitude < 1e6)) config_error(where + ": random_amplitude out of range");
  } else {
    config_error(where + " must be an expression string or {\"random_amplitude\": a}");
  }
  return f;
}

inline Json field_json(const FieldSpec& f) {
  if (f.random_amplitude) return Json{{"random_amplitude", *f.random_amplitude}};
  return f.expression;
}

inline std::vector<double> parse_grid(const Json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) config_error(where + " must be a non-empty array of numbers");
  std::vector<double> g;
  for (const auto& x : v) {
    if (!x.is_number()) config_error(where + " must contain numbers only");
    g.push_back(x.get<double>());
  }
  return g;
}

}  // namespace detail

/// Parses a configuration document. `base_dir` resolves a relative mesh path.
inline ExperimentConfig parse_config(const Json& doc, const std::filesystem::path& base_dir = {}) {
  using detail::config_error;
  using detail::get;
  detail::reject_unknown(doc, "config",
                         {"schema_version", "experiment", "surface", "perturbation", "solver", "obstruction", "convexity",
                          "metric_probe", "output", "seed"});
  ExperimentConfig c;
  if (doc.contains("schema_version") && get<int>(doc, "schema_version", "config") != kSchemaVersion)
    config_error("unsupported schema_version");
  if (doc.contains("experiment")) {
    const auto e = parse_experiment(get<std::string>(doc, "experiment", "config"));
    if (!e) config_error("unknown experiment '" + doc["experiment"].get<std::string>() + "'");
    c.experiment = e;
  }
  if (doc.contains("surface")) {
    const Json& s = doc["surface"];
    detail::reject_unknown(s, "surface", {"kind", "nx", "ny", "lx", "ly", "path"});
    const std::string kind = s.contains("kind") ? get<std::string>(s, "kind", "surface") : "torus";
    if (kind == "torus") {
      if (s.contains("path")) config_error("surface.path is only valid for kind 'mesh'");
      if (s.contains("nx")) c.nx = get<int>(s, "nx", "surface");
      if (s.contains("ny")) c.ny = get<int>(s, "ny", "surface");
      if (s.contains("lx")) c.lx = get<double>(s, "lx", "surface");
      if (s.contains("ly")) c.ly = get<double>(s, "ly", "surface");
      if (c.nx < 4 || c.ny < 4 || c.nx > 4096 || c.ny > 4096) config_error("surface.nx, surface.ny must lie in [4, 4096]");
      if (!(c.lx > 0.0) || !(c.ly > 0.0)) config_error("surface.lx, surface.ly must be positive");
    } else if (kind == "mesh") {
      for (const char* k : {"nx", "ny", "lx", "ly"})
        if (s.contains(k)) config_error(std::string("surface.") + k + " is only valid for kind 'torus'");
      c.torus = false;
      std::filesystem::path p = get<std::string>(s, "path", "surface");
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      if (!std::filesystem::exists(p)) config_error("mesh file '" + p.string() + "' does not exist");
      c.mesh_path = p.string();
    } else {
      config_error("surface.kind must be 'torus' or 'mesh'");
    }
  }
  if (doc.contains("perturbation")) {
    const Json& p = doc["perturbation"];
    detail::reject_unknown(p, "perturbation", {"side", "f1", "f2"});
    if (p.contains("side")) {
      const std::string side = get<std::string>(p, "side", "perturbation");
      if (side == "inverse_metric") c.side = PerturbationSide::InverseMetric;
      else if (side == "metric") c.side = PerturbationSide::Metric;
      else config_error("perturbation.side must be 'inverse_metric' or 'metric'");
    }
    if (p.contains("f1")) c.f1 = detail::parse_field(p["f1"], "perturbation.f1");
    if (p.contains("f2") && !p["f2"].is_null()) c.f2 = detail::parse_field(p["f2"], "perturbation.f2");
    if (c.f2 && c.side == PerturbationSide::Metric) config_error("perturbation.f2 is not supported on the metric side");
  }
  if (doc.contains("solver")) {
    const Json& s = doc["solver"];
    detail::reject_unknown(s, "solver", {"n_modes", "tol_deg", "truncation"});
    if (s.contains("n_modes")) c.n_modes = get<Eigen::Index>(s, "n_modes", "solver");
    if (s.contains("tol_deg")) c.tol_deg = get<double>(s, "tol_deg", "solver");
    if (s.contains("truncation")) c.truncation = get<Eigen::Index>(s, "truncation", "solver");
    if (c.n_modes < 1) config_error("solver.n_modes must be >= 1");
    if (!(c.tol_deg >= 1e-12 && c.tol_deg <= 1e-2)) config_error("solver.tol_deg must lie in [1e-12, 1e-2]");
    if (c.truncation != -1 && c.truncation < 1) config_error("solver.truncation must be -1 or >= 1");
  }
  if (doc.contains("obstruction")) {
    const Json& o = doc["obstruction"];
    detail::reject_unknown(o, "obstruction", {"basis", "basis_dim", "kernel_tol"});
    if (o.contains("basis")) c.basis = get<std::string>(o, "basis", "obstruction");
    if (o.contains("basis_dim")) c.basis_dim = get<std::size_t>(o, "basis_dim", "obstruction");
    if (o.contains("kernel_tol")) c.kernel_tol = get<double>(o, "kernel_tol", "obstruction");
    if (c.basis != "auto" && c.basis != "fourier" && c.basis != "harmonic")
      config_error("obstruction.basis must be 'auto', 'fourier' or 'harmonic'");
    if (c.basis_dim < 1) config_error("obstruction.basis_dim must be >= 1");
    if (!(c.kernel_tol > 0.0 && c.kernel_tol < 1.0)) config_error("obstruction.kernel_tol must lie in (0, 1)");
  }
  if (doc.contains("convexity")) {
    const Json& v = doc["convexity"];
    detail::reject_unknown(v, "convexity", {"c1", "c2", "tau_grid"});
    if (v.contains("c1")) c.c1 = detail::parse_field(v["c1"], "convexity.c1");
    if (v.contains("c2")) c.c2 = detail::parse_field(v["c2"], "convexity.c2");
    if (v.contains("tau_grid")) c.tau_grid = detail::parse_grid(v["tau_grid"], "convexity.tau_grid");
    for (double tau : c.tau_grid)
      if (!(tau >= 0.0 && tau <= 1.0)) config_error("convexity.tau_grid values must lie in [0, 1]");
  }
  if (doc.contains("metric_probe")) {
    const Json& m = doc["metric_probe"];
    detail::reject_unknown(m, "metric_probe", {"f", "t_grid", "series_tolerance"});
    if (m.contains("f")) c.f = detail::parse_field(m["f"], "metric_probe.f");
    if (m.contains("t_grid")) c.t_grid = detail::parse_grid(m["t_grid"], "metric_probe.t_grid");
    if (m.contains("series_tolerance")) c.series_tolerance = get<double>(m, "series_tolerance", "metric_probe");
    for (double t : c.t_grid)
      if (!(t > 0.0 && t < 1.0)) config_error("metric_probe.t_grid values must lie in (0, 1)");
    if (!(c.series_tolerance > 0.0)) config_error("metric_probe.series_tolerance must be positive");
  }
  if (doc.contains("output")) {
    const Json& o = doc["output"];
    detail::reject_unknown(o, "output", {"dir"});
    if (o.contains("dir")) c.out_dir = get<std::string>(o, "dir", "output");
  }
  if (doc.contains("seed")) c.seed = get<std::uint64_t>(doc, "seed", "config");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, "config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc, std::filesystem::path(path).parent_path());
}

/// The resolved configuration in the same schema parse_config accepts.
inline Json config_json(const ExperimentConfig& c) {
  Json surface = c.torus ? Json{{"kind", "torus"}, {"nx", c.nx}, {"ny", c.ny}, {"lx", c.lx}, {"ly", c.ly}}
                         : Json{{"kind", "mesh"}, {"path", std::filesystem::absolute(c.mesh_path).string()}};
  Json pert{{"side", c.side == PerturbationSide::InverseMetric ? "inverse_metric" : "metric"},
            {"f1", detail::field_json(c.f1)}};
  if (c.f2) pert["f2"] = detail::field_json(*c.f2);
  Json doc{{"schema_version", kSchemaVersion}};
  if (c.experiment) doc["experiment"] = to_string(*c.experiment);
  doc["surface"] = surface;
  doc["perturbation"] = pert;
  doc["solver"] = {{"n_modes", c.n_modes}, {"tol_deg", c.tol_deg}, {"truncation", c.truncation}};
  doc["obstruction"] = {{"basis", c.basis}, {"basis_dim", c.basis_dim}, {"kernel_tol", c.kernel_tol}};
  doc["convexity"] = {{"c1", detail::field_json(c.c1)}, {"c2", detail::field_json(c.c2)}, {"tau_grid", c.tau_grid}};
  doc["metric_probe"] = {{"f", detail::field_json(c.f)}, {"t_grid", c.t_grid}, {"series_tolerance", c.series_tolerance}};
  doc["output"] = {{"dir", c.out_dir}};
  doc["seed"] = c.seed;
  return doc;
}

// ---------------------------------------------------------------------------
// Running

struct RunResult {
  int exit_code = kExitOk;
  std::vector<std::string> artifacts;  // file names inside the output directory
  Json error;                          // null on success
};

namespace detail {

inline DiscreteSurface build_surface(const ExperimentConfig& c) {
  if (c.torus) return make_torus(c.nx, c.ny, c.lx, c.ly);
  return load_mesh(c.mesh_path);
}

// Each random field draws from its own stream so adding a field to a config
// does not change the others.
inline ScalarField build_field(const DiscreteSurface& s, const FieldSpec& f, std::uint64_t seed, std::uint64_t stream) {
  if (f.random_amplitude) return random_smooth_field(s, seed * 1000003ULL + stream, *f.random_amplitude);
  return field_from_expression(s, f.expression);
}

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_))
      throw Error(ErrorKind::Io, "cannot create output directory '" + dir_.string() + "'");
  }

  std::ofstream open(const std::string& name, std::vector<std::string>& artifacts) const {
    std::ofstream out(dir_ / name);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + (dir_ / name).string() + "'");
    artifacts.push_back(name);
    return out;
  }

  void write_json(const std::string& name, const Json& j, std::vector<std::string>& artifacts) const {
    auto out = open(name, artifacts);
    out << j.dump(2) << '\n';
  }

  const std::filesystem::path& path() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

inline ConformalPerturbation build_perturbation(const DiscreteSurface& s, const ExperimentConfig& c) {
  const ScalarField f1 = build_field(s, c.f1, c.seed, 1);
  if (c.f2) return ConformalPerturbation(c.side, f1, build_field(s, *c.f2, c.seed, 2));
  return ConformalPerturbation(c.side, f1);
}

inline Eigen::Index clamp_modes(const ExperimentConfig& c, const OperatorPair& base) {
  if (c.n_modes > base.size())
    throw Error(ErrorKind::InvalidArgument, "n_modes " + std::to_string(c.n_modes) + " exceeds the node count " +
                                                std::to_string(base.size()));
  return c.n_modes;
}

inline void run_experiment(Experiment e, const ExperimentConfig& c, const OutputDir& out,
                           std::vector<std::string>& artifacts) {
  const DiscreteSurface s = build_surface(c);
  const OperatorPair base = assemble_base(s);
  const Eigen::Index n_modes = clamp_modes(c, base);
  log(LogLevel::Info, std::string("running ") + to_string(e) + " on " + std::to_string(s.node_count()) + " nodes");

  switch (e) {
    case Experiment::Spectrum: {
      const SpectralData spec = solve(base, n_modes, c.tol_deg);
      auto csv = out.open("spectrum.csv", artifacts);
      write_spectrum_csv(csv, spec);
      out.write_json("spectrum.json", to_json(spec), artifacts);
      break;
    }
    case Experiment::Corrections: {
      const Eigen::Index basis = c.truncation == -1 ? base.size() : std::max(c.truncation, n_modes);
      if (basis > base.size()) throw Error(ErrorKind::InvalidArgument, "truncation exceeds the node count");
      const SpectralData spec = solve(base, basis, c.tol_deg);
      const PerturbationOperators ops = conformal_operators(base, build_perturbation(s, c));
      const CorrectionReport full = corrections(spec, base, ops, basis);
      CorrectionReport r = full;
      r.lambda0 = full.lambda0.head(n_modes);
      r.lambda1 = full.lambda1.head(n_modes);
      r.lambda2 = full.lambda2.head(n_modes);
      r.tail_estimate = full.tail_estimate.head(n_modes);
      r.truncation_warning.resize(static_cast<std::size_t>(n_modes));
      r.psi1_coeffs = full.psi1_coeffs.leftCols(n_modes);
      for (Eigen::Index n = 0; n < n_modes; ++n)
        if (r.truncation_warning[static_cast<std::size_t>(n)])
          log(LogLevel::Warn, "mode " + std::to_string(n) + ": truncation tail exceeds 1% of the second-order sum");
      out.write_json("corrections.json", to_json(r), artifacts);
      break;
    }
    case Experiment::Obstruction: {
      const SpectralData spec = solve(base, n_modes, c.tol_deg);
      std::vector<ScalarField> fields;
      const bool fourier = c.basis == "fourier" || (c.basis == "auto" && s.kind() == SurfaceKind::TorusGrid);
      if (fourier) {
        fields = fourier_basis(s, c.basis_dim);
      } else {
        const auto dim = static_cast<Eigen::Index>(c.basis_dim);
        const SpectralData harmonics = dim <= n_modes ? spec : solve(base, dim, c.tol_deg);
        fields = harmonic_basis(s, harmonics, c.basis_dim);
      }
      const ObstructionReport r = obstruction_map(spec, fields, n_modes, c.kernel_tol);
      out.write_json("obstruction.json", to_json(r), artifacts);
      break;
    }
    case Experiment::Convexity: {
      const ScalarField c1 = build_field(s, c.c1, c.seed, 3);
      const ScalarField c2 = build_field(s, c.c2, c.seed, 4);
      const ConvexityProbeReport r = convexity_probe(base, c1, c2, n_modes, c.tau_grid);
      out.write_json("convexity.json", to_json(r), artifacts);
      auto csv = out.open("convexity.csv", artifacts);
      write_sweep_csv(csv, r.tau_grid, r.spectra, r.reference_spectrum);
      break;
    }
    case Experiment::MetricProbe: {
      const Eigen::Index basis = c.truncation == -1 ? base.size() : std::max(c.truncation, n_modes);
      if (basis > base.size()) throw Error(ErrorKind::InvalidArgument, "truncation exceeds the node count");
      const SpectralData spec = solve(base, basis, c.tol_deg);
      const MetricProbeReport r =
          metric_side_probe(base, spec, build_field(s, c.f, c.seed, 5), n_modes, c.t_grid, c.series_tolerance);
      out.write_json("metric_probe.json", to_json(r), artifacts);
      std::vector<double> ts;
      Eigen::MatrixXd exact(static_cast<Eigen::Index>(r.steps.size()), n_modes);
      for (std::size_t k = 0; k < r.steps.size(); ++k) {
        ts.push_back(r.steps[k].t);
        exact.row(static_cast<Eigen::Index>(k)) = r.steps[k].exact.transpose();
      }
      auto csv = out.open("metric_probe.csv", artifacts);
      write_sweep_csv(csv, ts, exact, r.lambda0);
      break;
    }
    case Experiment::Weyl: {
      const SpectralData spec = solve(base, n_modes, c.tol_deg);
      const double area = weyl_volume_estimate(spec);
      out.write_json("weyl.json",
                     Json{{"schema_version", kSchemaVersion},
                          {"kind", "weyl"},
                          {"n_modes", n_modes},
                          {"area_estimate", area},
                          {"area", s.area()},
                          {"relative_error", std::abs(area - s.area()) / s.area()}},
                     artifacts);
      break;
    }
  }
}

inline Json error_record(const Error& e, int code) {
  Json err{{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
  err["node"] = e.node() ? Json(*e.node()) : Json(nullptr);
  return {{"schema_version", kSchemaVersion}, {"exit_code", code}, {"error", err}};
}

}  // namespace detail

inline int exit_code_for(ErrorKind kind) { return is_config_error(kind) ? kExitConfig : kExitNumerical; }

/// Runs one experiment and writes its artifacts, a run manifest, and on
/// failure an error record (error.json) into c.out_dir.
inline RunResult run(const ExperimentConfig& c) {
  RunResult result;
  const auto start = std::chrono::steady_clock::now();
  std::optional<detail::OutputDir> out;
  try {
    if (!c.experiment) throw Error(ErrorKind::Config, "no experiment selected");
    out.emplace(c.out_dir);
    detail::run_experiment(*c.experiment, c, *out, result.artifacts);
  } catch (const Error& e) {
    result.exit_code = exit_code_for(e.kind());
    result.error = detail::error_record(e, result.exit_code);
  } catch (const std::exception& e) {
    result.exit_code = kExitNumerical;
    result.error = detail::error_record(Error(ErrorKind::NumericalBreakdown, e.what()), result.exit_code);
  }
  if (!result.error.is_null()) {
    std::cerr << result.error.dump() << '\n';
    if (out) {
      try {
        out->write_json("error.json", result.error, result.artifacts);
      } catch (const Error&) {
      }
    }
  }
  if (out) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Json manifest{{"schema_version", kSchemaVersion},
                  {"tool", "isospec"},
                  {"version", kVersion},
                  {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                  {"compiler", __VERSION__},
                  {"seed", c.seed},
                  {"wall_time_seconds", wall},
                  {"exit_code", result.exit_code},
                  {"config", config_json(c)}};
    Json files = Json::array();
    for (const auto& a : result.artifacts) files.push_back(a);
    manifest["artifacts"] = files;
    try {
      std::vector<std::string> ignored;
      out->write_json("manifest.json", manifest, ignored);
    } catch (const Error& e) {
      if (result.exit_code == kExitOk) {
        result.exit_code = kExitConfig;
        result.error = detail::error_record(e, result.exit_code);
      }
    }
  }
  return result;
}

/// Reduced acceptance suite. Output contains no timings so repeated runs are
/// byte-identical.
inline int selftest(std::ostream& os, const std::string& data_dir = "") {
  acceptance::Options opt;
  opt.reduced = true;
  opt.data_dir = data_dir;
  if (opt.data_dir.empty()) {
    const char* env = std::getenv("ISOSPEC_DATA_DIR");
    opt.data_dir = env != nullptr ? env : ISOSPEC_DATA_DIR;
  }
  int failed = 0;
  for (int id = 1; id <= 10; ++id) {
    const acceptance::CriterionResult r = acceptance::run_criterion(id, opt);
    os << acceptance::format_line(r) << '\n';
    if (!r.passed) ++failed;
  }
  os << (failed == 0 ? "selftest passed" : "selftest failed: " + std::to_string(failed) + " criteria") << '\n';
  return failed == 0 ? kExitOk : kExitNumerical;
}

}  // namespace isospec::cli
