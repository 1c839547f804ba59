#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "glq/errors.hpp"
#include "glq/experiment.hpp"
#include "glq/field_io.hpp"
#include "glq/homotopy.hpp"
#include "glq/loops.hpp"
#include "glq/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw glq::MissingArtifactError("cannot open " + path.string());
  json j;
  in >> j;
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << "\n";
}

int run_homotopy(const fs::path& config_path, const fs::path& out_dir) {
  const json cfg = config_path.empty() ? json::object() : read_json(config_path);
  const std::string group_spec = cfg.value("group", "q8");
  auto group = glq::io::group_by_name_or_file(group_spec);
  auto alg = glq::homotopy::ClassAlgebra::build(group);

  const auto verify = glq::homotopy::verify_sum_properties(alg);

  glq::homotopy::EminTable emin;
  if (cfg.contains("emin_file")) {
    emin = glq::io::load_emin(cfg["emin_file"].get<std::string>());
  } else {
    const double uniform = cfg.value("uniform_emin", 1.0);
    emin.values.assign(alg.num_classes(), uniform);
    emin.values[alg.trivial_class] = 0.0;
  }
  const auto norms = glq::homotopy::norm_star(emin, alg);

  fs::create_directories(out_dir);
  glq::io::save_norms(norms, alg, out_dir / "norms.json");
  json vr;
  vr["axioms_ok"] = verify.axioms_ok;
  vr["identity_ok"] = verify.identity_ok;
  vr["inverse_ok"] = verify.inverse_ok;
  vr["associativity_ok"] = verify.associativity_ok;
  vr["commutativity_ok"] = verify.commutativity_ok;
  vr["violations"] = verify.violations;
  write_json(out_dir / "verify.json", vr);

  std::cout << "group " << group_spec << ": " << alg.num_classes() << " classes, gap c0 = "
            << norms.gap << "\n";
  for (int c = 0; c < alg.num_classes(); ++c)
    std::cout << "  " << alg.class_label(c) << ": E_min = " << emin.values[c]
              << ", |sigma|_* = " << norms.norms[c] << "\n";
  std::cout << "sum properties: " << (verify.all_ok() ? "all hold" : "VIOLATIONS") << "\n";
  for (const auto& v : verify.violations) std::cout << "  " << v << "\n";
  return verify.all_ok() ? 0 : 1;
}

int run_geodesic(const fs::path& config_path, const fs::path& out_dir) {
  const json cfg = config_path.empty() ? json::object() : read_json(config_path);
  const std::string manifold_id = cfg.value("manifold", "projective-RP2-qtensor");
  const int K = cfg.value("K", 256);
  glq::loops::RelaxConfig rcfg;
  rcfg.max_steps = cfg.value("max_steps", 400000);
  rcfg.energy_tol = cfg.value("energy_tol", 1e-12);
  const std::uint64_t seed = cfg.value("seed", 1u);
  const double noise = cfg.value("noise", 0.05);
  fs::create_directories(out_dir);

  json summary;
  summary["manifold"] = manifold_id;
  summary["K"] = K;
  json entries = json::array();

  if (manifold_id == "circle-S1") {
    std::vector<int> degrees = {0, 1, 2, 3};
    if (cfg.contains("degrees")) degrees = cfg["degrees"].get<std::vector<int>>();
    json values = json::array(), closed = json::array();
    for (int d : degrees) {
      auto loop = glq::loops::circle_loop(d, K, noise, seed);
      auto res = glq::loops::relax_geodesic(std::move(loop), rcfg);
      glq::io::save_loop(res.loop, out_dir / ("loop_d" + std::to_string(d) + ".csv"));
      values.push_back(res.energy);
      closed.push_back(glq::homotopy::circle_emin(d));
      entries.push_back({{"degree", d},
                         {"energy", res.energy},
                         {"closed_form", glq::homotopy::circle_emin(d)},
                         {"steps", res.steps},
                         {"converged", res.converged}});
      std::cout << "degree " << d << ": E_min = " << res.energy << " (pi d^2 = "
                << glq::homotopy::circle_emin(d) << ")\n";
    }
    json emin;
    emin["group_ref"] = "circle-S1(Z)";
    emin["degrees"] = degrees;
    emin["values"] = values;
    emin["closed_form"] = closed;
    write_json(out_dir / "emin.json", emin);
  } else if (manifold_id == "projective-RP2-qtensor") {
    const double scale = cfg.value("embedding_scale",
                                   glq::manifolds::EmbeddedManifold::kDefaultRP2Scale);
    auto loop = glq::loops::rp2_loop(true, K, scale, noise, seed);
    auto res = glq::loops::relax_geodesic(std::move(loop), rcfg);
    glq::io::save_loop(res.loop, out_dir / "loop_nontrivial.csv");
    glq::homotopy::EminTable emin;
    emin.values = {0.0, res.energy};
    glq::io::save_emin(emin, "z2", out_dir / "emin.json");
    entries.push_back({{"class", "nontrivial"},
                       {"energy", res.energy},
                       {"steps", res.steps},
                       {"converged", res.converged}});
    std::cout << "RP2 nontrivial class: E_min = " << res.energy << "\n";
  } else if (manifold_id == "sphere-S2") {
    auto loop = glq::loops::sphere_loop(K, 0.3, noise, seed);
    auto res = glq::loops::relax_geodesic(std::move(loop), rcfg);
    glq::io::save_loop(res.loop, out_dir / "loop_trivial.csv");
    glq::homotopy::EminTable emin;
    emin.values = {0.0};
    glq::io::save_emin(emin, "trivial", out_dir / "emin.json");
    entries.push_back(
        {{"class", "trivial"}, {"energy", res.energy}, {"steps", res.steps}});
    std::cout << "S2 loop relaxed to E = " << res.energy << "\n";
  } else {
    throw glq::ConfigError("geodesic: unknown manifold " + manifold_id);
  }
  summary["entries"] = entries;
  write_json(out_dir / "geodesic_summary.json", summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ginzburg-Landau vacuum-manifold energy toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  int threads = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  app.add_option("--config", config_path, "JSON configuration file")->capture_default_str();
  app.add_option("--out", out_dir, "output / bundle directory")->capture_default_str();
  app.add_option("--threads", threads, "worker threads (fallback: GLQ_THREADS)");
  app.add_option_function<std::uint64_t>(
         "--seed", [&](std::uint64_t s) { seed = s; seed_given = true; },
         "seed override");
  app.fallthrough();

  auto* cmd_homotopy =
      app.add_subcommand("homotopy", "conjugacy classes, sum properties, |sigma|_* norms");
  auto* cmd_geodesic =
      app.add_subcommand("geodesic", "relax loop representatives into E_min tables");
  auto* cmd_solve = app.add_subcommand("solve", "minimize E_eps over an eps schedule + analyze");
  auto* cmd_analyze = app.add_subcommand("analyze", "re-run diagnostics from a bundle");
  auto* cmd_report = app.add_subcommand("report", "emit report.json / report.txt from a bundle");

  CLI11_PARSE(app, argc, argv);

  if (threads > 0) glq::par::set_threads(threads);

  try {
    if (cmd_homotopy->parsed()) return run_homotopy(config_path, out_dir);
    if (cmd_geodesic->parsed()) return run_geodesic(config_path, out_dir);
    if (cmd_solve->parsed()) {
      if (config_path.empty()) throw glq::ConfigError("solve needs --config");
      auto cfg = glq::experiment::ExperimentConfig::from_json_file(config_path);
      if (seed_given) cfg.seed = seed;
      const auto outcome = glq::experiment::run_experiment(cfg, out_dir);
      for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "bundle written to " << outcome.bundle.string() << "\n";
      return static_cast<int>(outcome.exit_code);
    }
    if (cmd_analyze->parsed()) {
      const auto code = glq::experiment::analyze_bundle(out_dir);
      std::cout << "analysis written to " << (fs::path(out_dir) / "analysis.json").string()
                << "\n";
      return static_cast<int>(code);
    }
    if (cmd_report->parsed()) {
      glq::experiment::emit_report(out_dir);
      std::cout << "report written to " << (fs::path(out_dir) / "report.txt").string() << "\n";
      return 0;
    }
  } catch (const glq::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
