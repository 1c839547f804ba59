#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "glq/analysis.hpp"
#include "glq/gl_core.hpp"

namespace glq::experiment {

// Analysis toggles and parameters for one experiment.
struct AnalysisConfig {
  std::vector<std::string> toggles;  // subset of: measure, monotonicity, pohozaev,
                                     // stationarity, extract, density, quantization,
                                     // perturbation, lower_bound
  std::vector<std::array<double, 3>> probes;
  std::vector<double> profile_radii;     // empty -> derived from the grid
  double pohozaev_radius = 0.5;
  double eta = 0.3;
  int extract_radius_cells = 8;
  double density_radius = 0.3;
  double quantization_tolerance = 0.25;  // hard verdict when quantization is toggled
  std::string norm_source = "auto";      // auto | circle | table:<path>
  int max_degree = 4;
  double residual_threshold = -1.0;      // advisory flag for profiles
  double lower_bound_radius = 0.8;       // 2D lower-bound diagnostic ball

  bool has(const std::string& toggle) const;
};

struct SolverSettings {
  long max_iter = 20000;
  double tolerance = 1e-2;
  std::string step_rule = "fixed";  // fixed | adaptive
  double step_scale = 1.0;
  int trace_every = 100;
};

struct ExperimentConfig {
  std::string manifold = "circle-S1";
  double embedding_scale = -1.0;  // RP2 only; <0 -> default
  std::string potential = "gl-quartic";
  double cap_value = -1.0;
  int dim = 2;
  std::array<double, 3> extent = {2.0, 2.0, 2.0};
  std::array<int, 3> counts = {64, 64, 64};
  std::vector<double> eps_schedule = {0.1, 0.05};
  gl::BCDescriptor bc;
  SolverSettings solver;
  AnalysisConfig analysis;
  double declared_M = -1.0;  // optional energy-bound declaration, checked post-run
  std::uint64_t seed = 1234;

  static ExperimentConfig from_json_file(const std::filesystem::path& path);
  // Schema validation; resolution rule h <= eps_min/2 produces `warnings`,
  // h > eps_min throws ConfigError.
  void validate(std::vector<std::string>* warnings = nullptr) const;

  manifolds::EmbeddedManifold make_manifold() const;
  manifolds::Potential make_potential() const;
  gl::Domain make_domain() const;
};

// Executes the solve per eps plus the requested diagnostics; the bundle
// contains everything needed to re-run `analyze` without re-solving.
struct RunOutcome {
  ExitCode exit_code = ExitCode::Ok;
  std::vector<std::string> warnings;
  std::filesystem::path bundle;
};

RunOutcome run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

// Re-runs the diagnostics from a bundle written by run_experiment. Returns
// the exit code determined by the hard verdicts.
ExitCode analyze_bundle(const std::filesystem::path& bundle);

// Writes report.json + report.txt from a complete bundle. Missing artifacts
// raise MissingArtifactError listing the absent files.
void emit_report(const std::filesystem::path& bundle);

// Least-squares line y = slope * x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Smallest energy change over `count` random compactly supported bump
// perturbations of the given amplitude (local-minimality spot check).
double min_perturbation_delta(const gl::GridField& field, int count, double amplitude,
                              std::uint64_t seed);

}  // namespace glq::experiment
