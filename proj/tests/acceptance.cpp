// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [work-dir]
//
// Optimization runs write their artifacts under work-dir (default
// ./acceptance_runs). Exit status is the number of failed criteria.

#include <Eigen/Dense>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

#include "fixtures.hpp"
#include "mma_problems.hpp"
#include "polyto/polyto.hpp"
#include "quad_oracle.hpp"

using namespace polyto;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& title, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

void gradient_fidelity() {
  using quad = oracle::quad;
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = fixtures::gradient_config();
  Evaluator ev(cfg);
  ScalarFunctionT<quad> J = [&](std::span<const quad> x) { return oracle::compliance(cfg, x); };
  ScalarFunctionT<quad> gv = [&](std::span<const quad> x) { return oracle::volume_constraint(cfg, x); };
  ScalarFunctionT<quad> gl = [&](std::span<const quad> x) { return oracle::min_length_constraint(cfg, x); };
  double ej = 0, ev_ = 0, el = 0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto z = fixtures::random_design(DesignVector::size(2, 4), seed);
    auto e = ev.evaluate(ev.design(z));
    auto rj = fd_check<quad>(J, z, e.grads.dJ_dz);
    auto rv = fd_check<quad>(gv, z, e.grads.dgv_dz);
    auto rl = fd_check<quad>(gl, z, e.grads.dgl_dz);
    ej = std::max(ej, rj.max_rel_error);
    ev_ = std::max(ev_, rv.max_rel_error);
    el = std::max(el, rl.max_rel_error);
    checked += rj.checked + rv.checked + rl.checked;
  }
  const double secs = seconds_since(t0);
  report(1, ej < 1e-4 && ev_ < 1e-5 && el < 1e-6 && checked > 0 && secs < 60.0,
         "gradient fidelity",
         fmt("max rel err J %.2e (<1e-4), g_v %.2e (<1e-5), g_l %.2e (<1e-6); %zu coords; %.1f s",
             ej, ev_, el, checked, secs));
}

void geometry_oracles() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> c(-20, 20), a(0, 2 * std::numbers::pi), d(1.0, 10.0);
  double worst_len = 0;
  int polys = 0;
  while (polys < 100) {
    const int S = 3 + static_cast<int>(rng() % 10);
    PolygonSet p(1, S);
    p.cx(0) = c(rng);
    p.cy(0) = c(rng);
    p.alpha(0) = a(rng);
    for (double& v : p.offsets(0)) v = d(rng);
    auto l = edge_lengths(0, p);
    if (*std::min_element(l.begin(), l.end()) <= 1e-6) continue;
    ++polys;
    auto v = polygon_vertices(0, p);
    if (v.size() != static_cast<std::size_t>(S)) {
      worst_len = 1e300;
      continue;
    }
    for (std::size_t k = 0; k < v.size(); ++k) {
      const Point &p0 = v[k], &p1 = v[(k + 1) % v.size()];
      const double mx = 0.5 * (p0.x + p1.x), my = 0.5 * (p0.y + p1.y);
      int face = 0;
      double best = 1e300;
      for (int j = 0; j < S; ++j) {
        double s = std::abs(halfspace_sdf(mx, my, p.cx(0), p.cy(0), p.face_angle(0, j), p.d(0, j)));
        if (s < best) best = s, face = j;
      }
      worst_len = std::max(worst_len, std::abs(l[face] - std::hypot(p1.x - p0.x, p1.y - p0.y)));
    }
  }

  std::uniform_real_distribution<double> u(-40, 40);
  int violations = 0;
  for (int t = 0; t < 10000; ++t) {
    const int S = 3 + static_cast<int>(rng() % 10);
    PolygonSet p(1, S);
    p.cx(0) = c(rng);
    p.cy(0) = c(rng);
    p.alpha(0) = a(rng);
    for (double& v : p.offsets(0)) v = d(rng);
    const double x = u(rng), y = u(rng);
    double mx = -1e300;
    for (int j = 0; j < S; ++j)
      mx = std::max(mx, halfspace_sdf(x, y, p.cx(0), p.cy(0), p.face_angle(0, j), p.d(0, j)));
    const double phi = polygon_sdf(x, y, 0, p);
    if (!(phi >= mx && phi <= mx + std::log(static_cast<double>(S)))) ++violations;
  }
  report(2, worst_len <= 1e-9 && violations == 0, "geometry oracles",
         fmt("edge length vs vertices max |diff| %.2e (<=1e-9) on 100 polygons; "
             "LSE sandwich violations %d / 10000",
             worst_len, violations));
}

void fea_correctness() {
  auto K = element_stiffness_unit(0.3, 0.6, 0.6);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> eig(K);
  int null_dim = 0;
  for (int i = 0; i < 8; ++i) null_dim += std::abs(eig.eigenvalues()[i]) < 1e-10;
  const double fourth = eig.eigenvalues()[3];

  // Dense oracle on a 4x2 mesh.
  auto mp = problem_library("mid_cantilever", 4, 2, 4, 2);
  ElasticitySolver solver(mp);
  std::vector<double> rho(8, 1.0);
  auto sol = solver.solve(rho);
  // Unit elements on a 4x2 domain; explicit dense assembly.
  auto Ku = element_stiffness_unit(0.3, 1.0, 1.0);
  Eigen::MatrixXd Kd = Eigen::MatrixXd::Zero(mp.num_dofs(), mp.num_dofs());
  for (int e = 0; e < mp.num_elements(); ++e) {
    auto dofs = mp.element_dofs(e);
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) Kd(dofs[a], dofs[b]) += Ku(a, b);
  }
  std::vector<int> free;
  for (int dof = 0; dof < mp.num_dofs(); ++dof)
    if (std::find(mp.fixed_dofs.begin(), mp.fixed_dofs.end(), dof) == mp.fixed_dofs.end())
      free.push_back(dof);
  Eigen::MatrixXd R(free.size(), free.size());
  Eigen::VectorXd f(free.size()), us(free.size());
  for (std::size_t i = 0; i < free.size(); ++i) {
    f[i] = mp.load[free[i]];
    us[i] = sol.u[free[i]];
    for (std::size_t j = 0; j < free.size(); ++j) R(i, j) = Kd(free[i], free[j]);
  }
  Eigen::VectorXd ud = R.fullPivLu().solve(f);
  const double rel = (us - ud).norm() / ud.norm();

  auto big = problem_library("mbb", 40, 20, 60, 30);
  ElasticitySolver s2(big);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01(0, 1);
  std::vector<double> r2(big.num_elements());
  for (double& v : r2) v = u01(rng);
  auto E = s2.moduli(r2);
  const double J1 = s2.solve_moduli(E).compliance;
  for (double& v : E) v *= 2;
  const double J2 = s2.solve_moduli(E).compliance;
  const double ratio = J2 / J1;

  report(3, null_dim == 3 && fourth > 1e-3 && rel <= 1e-8 && std::abs(ratio - 0.5) <= 1e-14,
         "FEA correctness",
         fmt("rigid-body null space dim %d (next eigenvalue %.3g); 4x2 sparse vs dense rel diff "
             "%.2e (<=1e-8); J(2E)/J(E) = %.17g",
             null_dim, fourth, rel, ratio));
}

void mma_regression() {
  bool ok = true;
  std::string detail;
  for (const auto& p : mma_problems::regression_set()) {
    auto o = mma_problems::solve(p, 100);
    bool this_ok = o.error < 1e-4 && o.iterations <= 100 && o.box_ok && o.move_ok;
    ok = ok && this_ok;
    detail += fmt("%s%s err %.1e in %d it (box %s, move %s)", detail.empty() ? "" : "; ",
                  p.name.c_str(), o.error, o.iterations, o.box_ok ? "ok" : "VIOLATED",
                  o.move_ok ? "ok" : "VIOLATED");
  }
  report(4, ok, "MMA regression", detail);
}

// ---------------------------------------------------------------------------

RunConfig base_config(const std::string& problem) {
  RunConfig c;
  c.problem.name = problem;
  return c;
}

void validation_run(const fs::path& root) {
  RunConfig c = base_config("mid_cantilever");
  c.problem.nelx = 100;
  c.problem.nely = 100;
  c.problem.lx = 2.0;
  c.problem.ly = 2.0;
  c.polygons.K = 1;
  c.polygons.S = 16;
  c.constraints.vf_star = 0.5;
  // On a 2x2 domain the LSE corner bias (ln 16 ~ 2.77) exceeds the default
  // offset range (0, lx/2), which would leave every design void. Widen the
  // offset range by that bias and start from a polygon whose smoothed area
  // is close to the target.
  c.bounds.d = Interval{0.0, 4.78};
  c.polygons.radius = 2.95;
  c.output.directory = (root / "validation").string();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    OptRun r = run(c);
    const auto& last = r.final_record();
    const double J0 = r.history.front().J;
    bool ok = r.iterations() <= 250 && last.g_v <= 1e-2 && last.J <= 0.5 * J0;
    report(5, ok, "validation run (mid-cantilever, K=1, S=16)",
           fmt("%s after %d iterations; g_v %.3e (<=1e-2); J %.5g -> %.5g (ratio %.3f, <=0.5); %.0f s",
               to_string(r.termination), r.iterations(), last.g_v, J0, last.J, last.J / J0,
               seconds_since(t0)));
  } catch (const std::exception& e) {
    report(5, false, "validation run (mid-cantilever, K=1, S=16)", e.what());
  }
}

void pareto_monotonicity(const fs::path& root) {
  RunConfig c = base_config("mbb");
  c.polygons.K = 6;
  c.polygons.S = 12;
  c.output.directory = (root / "mbb_vf").string();
  auto entries = sweep(c, "vf_star", {"0.3", "0.4", "0.5"});
  std::string detail;
  std::vector<double> J;
  bool ok = true;
  for (const auto& e : entries) {
    if (!e.run) {
      ok = false;
      detail += "vf " + e.value + " failed: " + e.error + "; ";
      continue;
    }
    const auto& r = e.run->final_record();
    J.push_back(r.J);
    detail += fmt("vf %s J %.5g (g_v %.1e, %d it); ", e.value.c_str(), r.J, r.g_v, e.run->iterations());
  }
  ok = ok && J.size() == 3 && J[0] > J[1] && J[1] > J[2];
  report(6, ok, "Pareto monotonicity (MBB vf sweep)", detail + (ok ? "strictly decreasing" : "NOT strictly decreasing"));
}

void min_length_guarantee(const fs::path& root) {
  RunConfig c = base_config("mid_cantilever");
  c.polygons.K = 6;
  c.polygons.S = 6;
  c.constraints.vf_star = 0.5;
  c.output.directory = (root / "mid_lstar").string();
  const std::vector<std::string> values = {"2", "4", "6", "8"};
  auto entries = sweep(c, "l_star", values);
  bool ok = true;
  std::string detail;
  double prevJ = -1;
  for (const auto& e : entries) {
    if (!e.run) {
      ok = false;
      detail += "l* " + e.value + " failed: " + e.error + "; ";
      continue;
    }
    const double ls = std::stod(e.value);
    const double lmin = min_vertex_edge_length(e.run->polygons);
    const double J = e.run->final_record().J;
    const bool len_ok = lmin >= ls * (1 - 1e-3);
    const bool mono = J >= prevJ;
    ok = ok && len_ok && mono;
    detail += fmt("l* %s: min edge %.4g%s, J %.5g%s, g_v %.1e; ", e.value.c_str(), lmin,
                  len_ok ? "" : " (TOO SHORT)", J, mono ? "" : " (DECREASED)",
                  e.run->final_record().g_v);
    prevJ = J;
  }
  report(7, ok, "minimum length guarantee (l* sweep)", detail);
}

void determinism_and_persistence(const fs::path& root) {
  RunConfig c = base_config("mbb");
  c.problem.nelx = 60;
  c.problem.nely = 30;
  c.polygons.init = "random";
  c.seed = 7;
  c.constraints.l_star = 3.0;
  c.optimizer.max_iter = 30;
  c.output.snapshots.clear();
  for (int i = 0; i <= 30; ++i) c.output.snapshots.push_back(i);

  RunConfig a = c, b = c;
  a.output.directory = (root / "determinism_a").string();
  b.output.directory = (root / "determinism_b").string();
  OptRun ra = run(a);
  run(b);
  const bool identical = read_text(fs::path(a.output.directory) / "history.csv") ==
                         read_text(fs::path(b.output.directory) / "history.csv");

  PolygonFile pf = read_polygons_json(fs::path(a.output.directory) / "polygons.json");
  double rt = 0;
  for (int i = 0; i < pf.polygons.K(); ++i) {
    rt = std::max({rt, std::abs(pf.polygons.cx(i) - ra.polygons.cx(i)),
                   std::abs(pf.polygons.cy(i) - ra.polygons.cy(i)),
                   std::abs(pf.polygons.alpha(i) - ra.polygons.alpha(i))});
    for (int j = 0; j < pf.polygons.S(); ++j)
      rt = std::max(rt, std::abs(pf.polygons.d(i, j) - ra.polygons.d(i, j)));
  }

  Evaluator ev(a);
  auto logged = parse_history_csv(read_text(fs::path(a.output.directory) / "history.csv"));
  double worst = 0;
  for (const auto& rec : logged) {
    auto snap = read_polygons_json(fs::path(a.output.directory) / "snapshots" /
                                   detail::snapshot_name(rec.iter));
    auto e = ev.evaluate(snap.polygons);
    worst = std::max({worst, std::abs(e.J - rec.J) / std::abs(rec.J), std::abs(e.g_v - rec.g_v),
                      std::abs(*e.g_l - rec.g_l)});
  }
  report(8, identical && rt <= 1e-12 && worst <= 1e-9, "determinism and persistence",
         fmt("history.csv byte-identical: %s; polygons.json round trip %.1e (<=1e-12); "
             "%zu snapshot rows recomputed, worst diff %.1e (<=1e-9)",
             identical ? "yes" : "NO", rt, logged.size(), worst));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_runs");
  fs::create_directories(root);

  auto guarded = [](int id, const char* title, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, title, std::string("error: ") + e.what());
    }
  };
  guarded(1, "gradient fidelity", gradient_fidelity);
  guarded(2, "geometry oracles", geometry_oracles);
  guarded(3, "FEA correctness", fea_correctness);
  guarded(4, "MMA regression", mma_regression);
  guarded(5, "validation run", [&] { validation_run(root); });
  guarded(6, "Pareto monotonicity", [&] { pareto_monotonicity(root); });
  guarded(7, "minimum length guarantee", [&] { min_length_guarantee(root); });
  guarded(8, "determinism and persistence", [&] { determinism_and_persistence(root); });

  std::printf("%d of 8 criteria failed\n", failures);
  return failures;
}
