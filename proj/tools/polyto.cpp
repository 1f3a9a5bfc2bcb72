// polyto: command-line front end for the polygon topology optimizer.
//
//   polyto run <config.json> [--output-dir DIR]
//   polyto sweep <config.json> --axis NAME --values a,b,c [--output-dir DIR]
//   polyto check-grads <config.json> --seed N
//   polyto render <run-dir> --out design.svg
//
// Exit codes: 0 converged (or command succeeded), 2 stopped at max_iter, 1 error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <random>

#include "polyto/polyto.hpp"

namespace {

using namespace polyto;

constexpr int kExitConverged = 0;
constexpr int kExitError = 1;
constexpr int kExitMaxIter = 2;

int cmd_run(const std::string& config_path, const std::string& output_dir, bool quiet) {
  RunConfig cfg = load_config(config_path);
  if (!output_dir.empty()) cfg.output.directory = output_dir;
  auto progress = [quiet](const IterationRecord& r) {
    if (quiet) return;
    std::printf("iter %4d  J %.6g  g_v % .4e  g_l % .4e  kkt %.3e  step %.3e\n", r.iter, r.J,
                r.g_v, r.g_l, r.kkt_norm, r.step_norm);
    std::fflush(stdout);
  };
  OptRun result = run(cfg, progress);
  std::printf("terminated: %s after %d iterations, J = %.9g, g_v = %.3e\n",
              to_string(result.termination), result.iterations(), result.final_record().J,
              result.final_record().g_v);
  return result.converged() ? kExitConverged : kExitMaxIter;
}

int cmd_sweep(const std::string& config_path, const std::string& output_dir,
              const std::string& axis, const std::vector<std::string>& values) {
  RunConfig cfg = load_config(config_path);
  if (!output_dir.empty()) cfg.output.directory = output_dir;
  if (!cfg.output.directory.empty()) ensure_writable_directory(cfg.output.directory);
  auto entries = sweep(cfg, axis, values);
  std::string table = sweep_table_csv(axis, entries);
  std::cout << table;
  if (!cfg.output.directory.empty())
    write_text(std::filesystem::path(cfg.output.directory) / ("sweep_" + axis + ".csv"), table);
  bool failed = false;
  for (const auto& e : entries) {
    if (!e.run) {
      std::cerr << "run " << axis << "=" << e.value << " failed: " << e.error << "\n";
      failed = true;
    }
  }
  return failed ? kExitError : kExitConverged;
}

int cmd_check_grads(const std::string& config_path, std::uint64_t seed) {
  RunConfig cfg = load_config(config_path);
  Evaluator evaluator(cfg);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uz(0.1, 0.9);
  std::vector<double> zv(DesignVector::size(cfg.polygons.K, cfg.polygons.S));
  for (double& v : zv) v = uz(rng);
  DesignVector z = evaluator.design(zv);
  Evaluation ev = evaluator.evaluate(z);

  auto report = [](const char* name, const FdReport& r) {
    std::printf("%-4s max rel error %.3e (coordinate %zu), checked %zu, below floor %zu, kinks %zu\n",
                name, r.max_rel_error, r.worst_index, r.checked, r.skipped_floor,
                r.skipped_kink);
  };
  auto J = [&](std::span<const double> x) {
    return evaluator.evaluate(evaluator.design({x.begin(), x.end()}), false).J;
  };
  auto gv = [&](std::span<const double> x) {
    return evaluator.evaluate(evaluator.design({x.begin(), x.end()}), false).g_v;
  };
  report("J", fd_check(J, zv, ev.grads.dJ_dz));
  report("g_v", fd_check(gv, zv, ev.grads.dgv_dz));
  if (cfg.constraints.l_star) {
    auto gl = [&](std::span<const double> x) {
      return min_length_constraint(
          smooth_min_length(all_edge_lengths(unnormalize(evaluator.design({x.begin(), x.end()})))),
          *cfg.constraints.l_star);
    };
    report("g_l", fd_check(gl, zv, ev.grads.dgl_dz));
  } else {
    std::printf("g_l  skipped (no l_star configured)\n");
  }
  return kExitConverged;
}

int cmd_render(const std::string& run_dir, const std::string& out) {
  namespace fs = std::filesystem;
  PolygonFile pf = read_polygons_json(fs::path(run_dir) / "polygons.json");
  std::optional<DensityGrid> grid;
  if (fs::exists(fs::path(run_dir) / "density.csv"))
    grid = parse_density_csv(read_text(fs::path(run_dir) / "density.csv"));
  fs::path target = out.empty() ? fs::path(run_dir) / "design.svg" : fs::path(out);
  write_text(target, design_svg(pf.polygons, pf.lx, pf.ly, grid ? &*grid : nullptr));
  std::printf("wrote %s\n", target.string().c_str());
  return kExitConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topology optimization with convex polygons"};
  app.require_subcommand(1);

  std::string config_path, output_dir, axis, values_arg, run_dir, svg_out;
  std::uint64_t seed = 0;
  bool quiet = false;

  auto* run_cmd = app.add_subcommand("run", "Optimize a single configuration");
  run_cmd->add_option("config", config_path, "config.json")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--output-dir", output_dir, "Override output.directory");
  run_cmd->add_flag("-q,--quiet", quiet, "Do not print per-iteration progress");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep_cmd->add_option("config", config_path, "Base config.json")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--axis", axis, "vf_star, K, S, l_star or init")->required();
  sweep_cmd->add_option("--values", values_arg, "Comma-separated values")->required();
  sweep_cmd->add_option("--output-dir", output_dir, "Override output.directory");

  auto* grads_cmd = app.add_subcommand("check-grads", "Compare gradients against finite differences");
  auto* cfg_pos = grads_cmd->add_option("config-file", config_path, "config.json")->check(CLI::ExistingFile);
  auto* cfg_opt = grads_cmd->add_option("--config", config_path, "config.json")->check(CLI::ExistingFile);
  cfg_pos->excludes(cfg_opt);
  grads_cmd->add_option("--seed", seed, "Seed for the random design point");

  auto* render_cmd = app.add_subcommand("render", "Render a run directory to SVG");
  render_cmd->add_option("run-dir", run_dir, "Directory holding polygons.json")->required();
  render_cmd->add_option("--out", svg_out, "Output SVG path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(config_path, output_dir, quiet);
    if (*sweep_cmd) {
      std::vector<std::string> values;
      std::stringstream ss(values_arg);
      for (std::string v; std::getline(ss, v, ',');)
        if (!v.empty()) values.push_back(v);
      return cmd_sweep(config_path, output_dir, axis, values);
    }
    if (*grads_cmd) {
      if (config_path.empty()) throw ConfigError("check-grads: a config file is required");
      return cmd_check_grads(config_path, seed);
    }
    if (*render_cmd) return cmd_render(run_dir, svg_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
