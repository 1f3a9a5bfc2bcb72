#pragma once
//
// End-to-end optimization loop: configuration, initialization, the MMA
// iteration, convergence checks, persistence and parameter sweeps.
//

#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyto/constraints.hpp"
#include "polyto/error.hpp"
#include "polyto/fea.hpp"
#include "polyto/geometry.hpp"
#include "polyto/io.hpp"
#include "polyto/mma.hpp"
#include "polyto/sensitivity.hpp"

namespace polyto {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ProblemConfig {
  std::string name = "mid_cantilever";
  int nelx = 100;
  int nely = 50;
  double lx = 60.0;
  double ly = 30.0;
};

struct PolygonConfig {
  int K = 8;
  int S = 6;
  std::string init = "grid";         ///< "grid" or "random"
  std::optional<std::array<int, 2>> grid;  ///< kx, ky; derived from the domain aspect when absent
  std::optional<double> radius;      ///< face offset at init; absent means "auto"
  double alpha0 = 0.0;
};

struct BoundsConfig {
  std::optional<Interval> cx, cy, alpha, d;
};

struct OptimizerConfig {
  int max_iter = 250;
  double move_limit = 0.05;
  double kkt_tol = 1e-6;
  double step_tol = 1e-6;
};

struct OutputConfig {
  std::string directory;  ///< empty: nothing is written
  std::vector<std::string> formats = {"history", "density", "polygons", "svg", "displacement"};
  std::vector<int> snapshots = {0, 5, 10, 30, 50};
  bool timings = false;  ///< write wall-clock seconds into history.csv
};

struct RunConfig {
  ProblemConfig problem;
  PolygonConfig polygons;
  BoundsConfig bounds;
  ProjectionParams projection;
  Material material;
  ConstraintConfig constraints;
  OptimizerConfig optimizer;
  OutputConfig output;
  std::uint64_t seed = 0;

  DesignBounds design_bounds() const {
    DesignBounds b = DesignBounds::defaults(problem.lx, problem.ly);
    if (bounds.cx) b.cx = *bounds.cx;
    if (bounds.cy) b.cy = *bounds.cy;
    if (bounds.alpha) b.alpha = *bounds.alpha;
    if (bounds.d) b.d = *bounds.d;
    return b;
  }

  std::array<int, 2> grid() const {
    if (polygons.grid) return *polygons.grid;
    // Factor pair of K whose cell aspect is closest to the domain's.
    const int K = polygons.K;
    std::array<int, 2> best = {K, 1};
    double best_err = std::numeric_limits<double>::infinity();
    for (int ky = 1; ky <= K; ++ky) {
      if (K % ky) continue;
      int kx = K / ky;
      double err = std::abs(std::log((static_cast<double>(kx) / ky) / (problem.lx / problem.ly)));
      if (err < best_err - 1e-12) {
        best_err = err;
        best = {kx, ky};
      }
    }
    return best;
  }

  MeshProblem mesh_problem() const {
    return problem_library(problem.name, problem.nelx, problem.nely, problem.lx, problem.ly,
                           material);
  }

  void validate() const {
    mesh_problem().validate();
    projection.validate();
    constraints.validate();
    if (polygons.K < 1) throw ConfigError("polygons: K must be >= 1");
    if (polygons.S < 3) throw ConfigError("polygons: S must be >= 3");
    if (polygons.init != "grid" && polygons.init != "random")
      throw ConfigError("polygons: init must be 'grid' or 'random'");
    auto g = grid();
    if (g[0] * g[1] != polygons.K)
      throw ConfigError("polygons: grid " + std::to_string(g[0]) + "x" + std::to_string(g[1]) +
                        " does not hold K=" + std::to_string(polygons.K));
    if (polygons.radius && !(*polygons.radius > 0.0))
      throw ConfigError("polygons: radius must be > 0");
    DesignVector(polygons.K, polygons.S, design_bounds(),
                 std::vector<double>(DesignVector::size(polygons.K, polygons.S), 0.0));
    if (optimizer.max_iter < 0) throw ConfigError("optimizer: max_iter must be >= 0");
    if (!(optimizer.move_limit > 0.0 && optimizer.move_limit <= 1.0))
      throw ConfigError("optimizer: move_limit must be in (0, 1]");
    if (optimizer.kkt_tol < 0.0 || optimizer.step_tol < 0.0)
      throw ConfigError("optimizer: tolerances must be >= 0");
    static const std::set<std::string> known = {"history", "density", "polygons", "svg",
                                                "displacement"};
    for (const auto& f : output.formats)
      if (!known.count(f)) throw ConfigError("output: unknown format '" + f + "'");
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::string& where,
                           std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* key : keys) ok = ok || k == key;
    if (!ok) throw ConfigError("config: unknown key '" + (where.empty() ? k : where + "." + k) + "'");
  }
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline Interval read_interval(const nlohmann::json& j, const std::string& where) {
  auto v = j.get<std::vector<double>>();
  if (v.size() != 2) throw ConfigError("config: '" + where + "' must be [lower, upper]");
  return {v[0], v[1]};
}

}  // namespace detail

/// Parses a config document; absent fields keep their defaults, unknown keys
/// are rejected.
inline RunConfig parse_config(const nlohmann::json& j) {
  using detail::read;
  using detail::reject_unknown;
  RunConfig c;
  try {
    reject_unknown(j, "", {"problem", "polygons", "bounds", "projection", "material",
                           "constraints", "optimizer", "output", "seed"});
    if (j.contains("problem")) {
      const auto& p = j["problem"];
      reject_unknown(p, "problem", {"name", "nelx", "nely", "lx", "ly"});
      read(p, "name", c.problem.name);
      read(p, "nelx", c.problem.nelx);
      read(p, "nely", c.problem.nely);
      read(p, "lx", c.problem.lx);
      read(p, "ly", c.problem.ly);
    }
    if (j.contains("polygons")) {
      const auto& p = j["polygons"];
      reject_unknown(p, "polygons", {"K", "S", "init", "grid", "radius", "alpha0"});
      read(p, "K", c.polygons.K);
      read(p, "S", c.polygons.S);
      read(p, "init", c.polygons.init);
      read(p, "alpha0", c.polygons.alpha0);
      if (p.contains("grid")) {
        auto g = p["grid"].get<std::vector<int>>();
        if (g.size() != 2) throw ConfigError("config: 'polygons.grid' must be [kx, ky]");
        c.polygons.grid = std::array<int, 2>{g[0], g[1]};
      }
      if (p.contains("radius")) {
        const auto& r = p["radius"];
        if (r.is_string()) {
          if (r.get<std::string>() != "auto")
            throw ConfigError("config: 'polygons.radius' must be a number or \"auto\"");
        } else {
          c.polygons.radius = r.get<double>();
        }
      }
    }
    if (j.contains("bounds")) {
      const auto& b = j["bounds"];
      reject_unknown(b, "bounds", {"cx", "cy", "alpha", "d"});
      if (b.contains("cx")) c.bounds.cx = detail::read_interval(b["cx"], "bounds.cx");
      if (b.contains("cy")) c.bounds.cy = detail::read_interval(b["cy"], "bounds.cy");
      if (b.contains("alpha")) c.bounds.alpha = detail::read_interval(b["alpha"], "bounds.alpha");
      if (b.contains("d")) c.bounds.d = detail::read_interval(b["d"], "bounds.d");
    }
    if (j.contains("projection")) {
      const auto& p = j["projection"];
      reject_unknown(p, "projection", {"beta", "q", "clamp_union"});
      read(p, "beta", c.projection.beta);
      read(p, "q", c.projection.q);
      read(p, "clamp_union", c.projection.clamp_union);
    }
    if (j.contains("material")) {
      const auto& m = j["material"];
      reject_unknown(m, "material", {"E0", "Emin", "nu", "p"});
      read(m, "E0", c.material.E0);
      read(m, "Emin", c.material.Emin);
      read(m, "nu", c.material.nu);
      read(m, "p", c.material.penal);
    }
    if (j.contains("constraints")) {
      const auto& k = j["constraints"];
      reject_unknown(k, "constraints", {"vf_star", "l_star"});
      read(k, "vf_star", c.constraints.vf_star);
      if (k.contains("l_star") && !k["l_star"].is_null())
        c.constraints.l_star = k["l_star"].get<double>();
    }
    if (j.contains("optimizer")) {
      const auto& o = j["optimizer"];
      reject_unknown(o, "optimizer", {"max_iter", "move_limit", "kkt_tol", "step_tol"});
      read(o, "max_iter", c.optimizer.max_iter);
      read(o, "move_limit", c.optimizer.move_limit);
      read(o, "kkt_tol", c.optimizer.kkt_tol);
      read(o, "step_tol", c.optimizer.step_tol);
    }
    if (j.contains("output")) {
      const auto& o = j["output"];
      reject_unknown(o, "output", {"directory", "formats", "snapshots", "timings"});
      read(o, "directory", c.output.directory);
      read(o, "formats", c.output.formats);
      read(o, "snapshots", c.output.snapshots);
      read(o, "timings", c.output.timings);
    }
    read(j, "seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  }
  return parse_config(j);
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["problem"] = {{"name", c.problem.name},
                  {"nelx", c.problem.nelx},
                  {"nely", c.problem.nely},
                  {"lx", c.problem.lx},
                  {"ly", c.problem.ly}};
  auto g = c.grid();
  j["polygons"] = {{"K", c.polygons.K},   {"S", c.polygons.S},
                   {"init", c.polygons.init}, {"grid", {g[0], g[1]}},
                   {"alpha0", c.polygons.alpha0}};
  if (c.polygons.radius)
    j["polygons"]["radius"] = *c.polygons.radius;
  else
    j["polygons"]["radius"] = "auto";
  DesignBounds b = c.design_bounds();
  j["bounds"] = {{"cx", {b.cx.lower, b.cx.upper}},
                 {"cy", {b.cy.lower, b.cy.upper}},
                 {"alpha", {b.alpha.lower, b.alpha.upper}},
                 {"d", {b.d.lower, b.d.upper}}};
  j["projection"] = {{"beta", c.projection.beta},
                     {"q", c.projection.q},
                     {"clamp_union", c.projection.clamp_union}};
  j["material"] = {{"E0", c.material.E0},
                   {"Emin", c.material.Emin},
                   {"nu", c.material.nu},
                   {"p", c.material.penal}};
  j["constraints"] = {{"vf_star", c.constraints.vf_star}};
  j["constraints"]["l_star"] =
      c.constraints.l_star ? nlohmann::json(*c.constraints.l_star) : nlohmann::json(nullptr);
  j["optimizer"] = {{"max_iter", c.optimizer.max_iter},
                    {"move_limit", c.optimizer.move_limit},
                    {"kkt_tol", c.optimizer.kkt_tol},
                    {"step_tol", c.optimizer.step_tol}};
  j["output"] = {{"directory", c.output.directory},
                 {"formats", c.output.formats},
                 {"snapshots", c.output.snapshots},
                 {"timings", c.output.timings}};
  j["seed"] = c.seed;
  return j;
}

// ---------------------------------------------------------------------------
// Evaluation of objective, constraints and gradients
// ---------------------------------------------------------------------------

struct Evaluation {
  PolygonSet polygons;
  DensityField field;
  FeaSolution fea;
  double J = 0.0;
  double g_v = 0.0;
  std::optional<double> g_l;
  double l_min = 0.0;  ///< smooth minimum edge length
  GradientBundle grads;
};

class Evaluator {
 public:
  explicit Evaluator(const RunConfig& config)
      : config_(config),
        solver_(config.mesh_problem()),
        centers_(solver_.problem().element_centers()),
        bounds_(config.design_bounds()) {}

  const MeshProblem& problem() const noexcept { return solver_.problem(); }
  const ElasticitySolver& solver() const noexcept { return solver_; }
  const DesignBounds& bounds() const noexcept { return bounds_; }
  std::span<const Point> centers() const noexcept { return centers_; }
  const RunConfig& config() const noexcept { return config_; }

  DesignVector design(std::vector<double> z) const {
    return {config_.polygons.K, config_.polygons.S, bounds_, std::move(z)};
  }

  /// Objective and constraints for an explicit polygon set.
  Evaluation evaluate(const PolygonSet& p) const {
    Evaluation ev;
    ev.polygons = p;
    const MeshProblem& mp = solver_.problem();
    ev.field = density_field(p, centers_, config_.projection);
    ev.fea = solver_.solve(ev.field.rho);
    ev.J = ev.fea.compliance;
    ev.g_v = volume_constraint(ev.field.rho, mp.element_area(), config_.constraints.vf_star,
                               mp.domain_area());
    ev.l_min = smooth_min_length(all_edge_lengths(p));
    if (config_.constraints.l_star)
      ev.g_l = min_length_constraint(ev.l_min, *config_.constraints.l_star);
    return ev;
  }

  Evaluation evaluate(const DesignVector& z, bool with_gradients = true) const {
    Evaluation ev = evaluate(unnormalize(z));
    if (with_gradients) {
      ev.grads.dJ_dz = grad_objective(z, solver_, ev.fea, ev.field, config_.projection);
      ev.grads.dgv_dz =
          grad_volume(z, solver_.problem(), ev.field, config_.projection, config_.constraints.vf_star);
      if (config_.constraints.l_star)
        ev.grads.dgl_dz = grad_minlength(z, *config_.constraints.l_star);
    }
    return ev;
  }

 private:
  RunConfig config_;
  ElasticitySolver solver_;
  std::vector<Point> centers_;
  DesignBounds bounds_;
};

/// Starting polygons: a grid (or, with init = "random", seeded random
/// centers) of equal regular polygons.
inline PolygonSet initial_polygons(const RunConfig& c) {
  const auto& pc = c.polygons;
  const double lx = c.problem.lx, ly = c.problem.ly;
  double r = pc.radius ? *pc.radius
                       : radius_for_area(pc.K, pc.S, pc.alpha0, c.constraints.vf_star * lx * ly);
  auto g = c.grid();
  PolygonSet p = init_grid(pc.K, pc.S, lx, ly, g[0], g[1], r, pc.alpha0);
  if (pc.init == "random") {
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> ux(0.0, lx), uy(0.0, ly);
    for (int i = 0; i < pc.K; ++i) {
      p.cx(i) = ux(rng);
      p.cy(i) = uy(rng);
    }
  }
  return p;
}

/// Normalized initial design, clipped to the unit box.
inline DesignVector initial_design(const RunConfig& c) {
  DesignVector z = normalize(initial_polygons(c), c.design_bounds());
  for (double& v : z.values()) v = std::clamp(v, 0.0, 1.0);
  return z;
}

// ---------------------------------------------------------------------------
// Optimization run
// ---------------------------------------------------------------------------

struct IterationRecord {
  int iter = 0;
  double J = 0.0;
  double g_v = 0.0;
  double g_l = std::numeric_limits<double>::quiet_NaN();  ///< NaN when not configured
  double kkt_norm = std::numeric_limits<double>::quiet_NaN();
  double step_norm = 0.0;
  double seconds = 0.0;
};

enum class Termination { max_iter, step_tol, kkt_tol };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::max_iter: return "max_iter";
    case Termination::step_tol: return "step_tol";
    case Termination::kkt_tol: return "kkt_tol";
  }
  return "?";
}

struct OptRun {
  RunConfig config;
  std::vector<IterationRecord> history;
  std::vector<double> z;  ///< final normalized design
  PolygonSet polygons;
  DensityField field;
  std::vector<double> displacement;
  Termination termination = Termination::max_iter;

  bool converged() const noexcept { return termination != Termination::max_iter; }
  int iterations() const noexcept { return history.empty() ? 0 : history.back().iter; }
  const IterationRecord& final_record() const { return history.back(); }
};

class RunError : public std::runtime_error {
 public:
  RunError(int iteration, const std::string& what)
      : std::runtime_error("iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

inline std::string history_csv(std::span<const IterationRecord> history, bool timings) {
  std::string s = "iter,J,g_v,g_l,kkt_norm,step_norm,seconds\n";
  for (const auto& r : history) {
    s += std::to_string(r.iter) + "," + format_double(r.J) + "," + format_double(r.g_v) + "," +
         format_double(r.g_l) + "," + format_double(r.kkt_norm) + "," +
         format_double(r.step_norm) + "," + (timings ? format_double(r.seconds, "%.6f") : "0") +
         "\n";
  }
  return s;
}

inline std::vector<IterationRecord> parse_history_csv(const std::string& text) {
  std::vector<IterationRecord> out;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw ConfigError("history.csv: malformed row '" + line + "'");
    IterationRecord r;
    r.iter = std::stoi(cells[0]);
    r.J = std::stod(cells[1]);
    r.g_v = std::stod(cells[2]);
    r.g_l = std::stod(cells[3]);
    r.kkt_norm = std::stod(cells[4]);
    r.step_norm = std::stod(cells[5]);
    r.seconds = std::stod(cells[6]);
    out.push_back(r);
  }
  return out;
}

namespace detail {

inline bool wants(const RunConfig& c, const char* format) {
  return std::find(c.output.formats.begin(), c.output.formats.end(), format) !=
         c.output.formats.end();
}

inline std::string snapshot_name(int iter) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "polygons_%04d.json", iter);
  return buf;
}

}  // namespace detail

/// Writes every configured artifact of `run` into its output directory.
inline void export_run(const OptRun& run, const std::filesystem::path& dir) {
  const RunConfig& c = run.config;
  ensure_writable_directory(dir);
  write_text(dir / "config.json", config_to_json(c).dump(2) + "\n");
  if (detail::wants(c, "history"))
    write_text(dir / "history.csv", history_csv(run.history, c.output.timings));
  if (run.polygons.K() == 0) return;
  const MeshProblem mp = c.mesh_problem();
  if (detail::wants(c, "polygons"))
    write_polygons_json(dir / "polygons.json", run.polygons, c.problem.lx, c.problem.ly);
  if (detail::wants(c, "density") && !run.field.empty())
    write_text(dir / "density.csv", density_csv(mp, run.field.rho));
  if (detail::wants(c, "displacement") && !run.displacement.empty())
    write_text(dir / "displacement.csv", displacement_csv(run.displacement));
  if (detail::wants(c, "svg")) {
    DensityGrid grid{mp.nelx, mp.nely, mp.lx, mp.ly, run.field.rho};
    write_text(dir / "design.svg",
               design_svg(run.polygons, c.problem.lx, c.problem.ly, run.field.empty() ? nullptr : &grid));
  }
}

using IterationCallback = std::function<void(const IterationRecord&)>;

/// Runs the optimization loop. With a non-empty output directory the
/// directory is checked before any computation, snapshots are written at the
/// configured iterations, and all artifacts are flushed at the end (or when a
/// module error aborts the run).
inline OptRun run(const RunConfig& config, const IterationCallback& on_iteration = {}) {
  config.validate();
  const std::filesystem::path out_dir = config.output.directory;
  const bool persist = !config.output.directory.empty();
  if (persist) {
    ensure_writable_directory(out_dir);
    std::filesystem::create_directories(out_dir / "snapshots");
  }
  const std::set<int> snapshots(config.output.snapshots.begin(), config.output.snapshots.end());

  OptRun result;
  result.config = config;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  int iter = 0;
  try {
    const Evaluator evaluator(config);
    DesignVector z = initial_design(config);
    Evaluation ev = evaluator.evaluate(z);

    // MMA sees compliance relative to the initial design.
    const double J_scale = ev.J > 0.0 ? 1.0 / ev.J : 1.0;

    auto record = [&](double kkt, double step) {
      IterationRecord r;
      r.iter = iter;
      r.J = ev.J;
      r.g_v = ev.g_v;
      if (ev.g_l) r.g_l = *ev.g_l;
      r.kkt_norm = kkt;
      r.step_norm = step;
      r.seconds = elapsed();
      result.history.push_back(r);
      if (persist && snapshots.count(iter))
        write_polygons_json(out_dir / "snapshots" / detail::snapshot_name(iter), ev.polygons,
                            config.problem.lx, config.problem.ly);
      if (on_iteration) on_iteration(r);
    };
    auto objective_grad = [&] {
      std::vector<double> g(ev.grads.dJ_dz);
      for (double& v : g) v *= J_scale;
      return g;
    };
    auto constraint_values = [&] {
      std::vector<double> g = {ev.g_v};
      if (ev.g_l) g.push_back(*ev.g_l);
      return g;
    };
    auto constraint_grads = [&] {
      std::vector<std::vector<double>> g = {ev.grads.dgv_dz};
      if (ev.g_l) g.push_back(ev.grads.dgl_dz);
      return g;
    };
    auto finish = [&](Termination t) {
      result.termination = t;
      result.z.assign(z.values().begin(), z.values().end());
      result.polygons = ev.polygons;
      result.field = ev.field;
      result.displacement = ev.fea.u;
    };

    record(std::numeric_limits<double>::quiet_NaN(), 0.0);

    MmaSettings settings;
    settings.move_limit = config.optimizer.move_limit;
    MmaState state(settings);
    Termination reason = Termination::max_iter;
    while (iter < config.optimizer.max_iter) {
      std::vector<double> z_new =
          mma_update(z.values(), ev.J * J_scale, objective_grad(), constraint_values(),
                     constraint_grads(), state);
      double step = 0.0;
      for (std::size_t k = 0; k < z_new.size(); ++k)
        step += (z_new[k] - z.values()[k]) * (z_new[k] - z.values()[k]);
      step = std::sqrt(step);

      ++iter;
      z = z.with_values(std::move(z_new));
      ev = evaluator.evaluate(z);
      const auto g = constraint_values();
      const auto dg = constraint_grads();
      const double kkt = kkt_residual(z.values(), objective_grad(), g, dg, state.multipliers);
      record(kkt, step);

      if (step <= config.optimizer.step_tol) {
        reason = Termination::step_tol;
        break;
      }
      if (kkt <= config.optimizer.kkt_tol) {
        reason = Termination::kkt_tol;
        break;
      }
    }
    finish(reason);
  } catch (const std::exception& e) {
    if (persist) {
      try {
        write_text(out_dir / "history.csv", history_csv(result.history, config.output.timings));
      } catch (...) {
      }
    }
    throw RunError(iter, e.what());
  }

  if (persist) {
    export_run(result, out_dir);
    write_polygons_json(out_dir / "snapshots" / detail::snapshot_name(result.iterations()),
                        result.polygons, config.problem.lx, config.problem.ly);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> axes = {"vf_star", "K", "S", "l_star", "init"};
  return axes;
}

/// Applies one sweep value to a copy of `base`. For "init", "grid" selects
/// the grid layout and an integer selects random centers with that seed.
inline RunConfig apply_sweep_value(const RunConfig& base, const std::string& axis,
                                   const std::string& value) {
  RunConfig c = base;
  try {
    if (axis == "vf_star") {
      c.constraints.vf_star = std::stod(value);
    } else if (axis == "l_star") {
      c.constraints.l_star = std::stod(value);
    } else if (axis == "K") {
      c.polygons.K = std::stoi(value);
      c.polygons.grid.reset();
    } else if (axis == "S") {
      c.polygons.S = std::stoi(value);
    } else if (axis == "init") {
      if (value == "grid") {
        c.polygons.init = "grid";
      } else {
        c.polygons.init = "random";
        c.seed = std::stoull(value);
      }
    } else {
      std::string valid;
      for (const auto& a : sweep_axes()) valid += (valid.empty() ? "" : ", ") + a;
      throw ConfigError("unknown sweep axis '" + axis + "' (valid: " + valid + ")");
    }
  } catch (const std::invalid_argument&) {
    throw ConfigError("sweep: invalid value '" + value + "' for axis '" + axis + "'");
  } catch (const std::out_of_range&) {
    throw ConfigError("sweep: value '" + value + "' out of range for axis '" + axis + "'");
  }
  if (!base.output.directory.empty())
    c.output.directory = (std::filesystem::path(base.output.directory) / (axis + "_" + value)).string();
  c.validate();
  return c;
}

struct SweepEntry {
  std::string value;
  std::optional<OptRun> run;
  std::string error;  ///< set when the run failed
};

inline std::vector<SweepEntry> sweep(const RunConfig& base, const std::string& axis,
                                     const std::vector<std::string>& values) {
  std::vector<SweepEntry> out;
  for (const auto& v : values) {
    SweepEntry entry;
    entry.value = v;
    try {
      entry.run = run(apply_sweep_value(base, axis, v));
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
    out.push_back(std::move(entry));
  }
  return out;
}

/// Comparison table: value, final J, g_v, g_l, iterations, termination.
inline std::string sweep_table_csv(const std::string& axis, std::span<const SweepEntry> entries) {
  std::string s = axis + ",J,g_v,g_l,iterations,termination\n";
  for (const auto& e : entries) {
    if (!e.run) {
      s += e.value + ",nan,nan,nan,0,error\n";
      continue;
    }
    const auto& r = e.run->final_record();
    s += e.value + "," + format_double(r.J) + "," + format_double(r.g_v) + "," +
         format_double(r.g_l) + "," + std::to_string(e.run->iterations()) + "," +
         to_string(e.run->termination) + "\n";
  }
  return s;
}

}  // namespace polyto
