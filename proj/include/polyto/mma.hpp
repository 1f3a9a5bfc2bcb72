#pragma once
//
// Method of Moving Asymptotes for
//
//   minimize f0(z)  subject to  g_i(z) <= 0 (i = 1..m),  0 <= z <= 1,
//
// following Svanberg's 2007 formulation: each iteration builds a convex
// separable approximation around the current asymptotes and solves its dual
// with a primal-dual interior point method (artificial variables a0 = 1,
// a = 0, c = 1000, d = 1).
//

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "polyto/error.hpp"

namespace polyto {

struct MmaSettings {
  double move_limit = 0.05;
  double asy_init = 0.5;
  double asy_incr = 1.2;
  double asy_decr = 0.7;
  // Asymptotes stay at least asy_min_gap from z (times the box span). The
  // classic 0.01 leaves interior optima in a limit cycle of about that width;
  // see the unconstrained-quadratic test.
  double asy_min_gap = 1e-4;
  double asy_max_gap = 10.0;  ///< ... and at most this far
  double albefa = 0.1;
  double raa0 = 1e-5;
  double a0 = 1.0;
  double a = 0.0;
  double c = 1000.0;
  double d = 1.0;
  double subproblem_tol = 1e-9;
  int max_newton_steps = 200;  ///< per barrier level
};

/// Optimal variables of the last subproblem, including the bound multipliers
/// (xsi for the lower, eta for the upper move-limit bound) and the constraint
/// multipliers lam.
struct MmaMultipliers {
  Eigen::VectorXd y;
  double z = 0.0;
  Eigen::VectorXd lam;
  Eigen::VectorXd xsi;
  Eigen::VectorXd eta;
  Eigen::VectorXd mu;
  double zet = 0.0;
  Eigen::VectorXd s;
};

struct MmaState {
  int iteration = 0;
  Eigen::VectorXd z_prev;   ///< iterate before the last update
  Eigen::VectorXd z_prev2;  ///< two updates back
  Eigen::VectorXd low;
  Eigen::VectorXd upp;
  MmaSettings settings;
  MmaMultipliers multipliers;

  MmaState() = default;
  explicit MmaState(MmaSettings s) : settings(s) {}
};

namespace detail {

struct Subproblem {
  int m, n;
  Eigen::VectorXd low, upp, alfa, beta, p0, q0, b;
  Eigen::MatrixXd P, Q;  // m x n
  double a0, a, c, d;
};

// Primal minimizer of the Lagrangian for fixed multipliers lam. Each x_k has
// the closed form sqrt(p) (x - l) = sqrt(q) (u - x), clipped to [alfa, beta];
// y_i = max(0, (lam_i - c) / d); z = 0 since a = 0 and a0 > 0.
struct DualPoint {
  double value = 0.0;           // W(lam)
  Eigen::VectorXd x, y, grad;  // grad = dW/dlam = g(x) - y - b
  Eigen::MatrixXd hess;        // d2W/dlam2, negative semidefinite
  Eigen::VectorXd dpsidx;      // dL/dx at x (nonzero only on clipped coordinates)
};

inline DualPoint dual_point(const Subproblem& sp, const Eigen::VectorXd& lam) {
  using Eigen::VectorXd;
  DualPoint dp;
  const VectorXd plam = sp.p0 + sp.P.transpose() * lam;
  const VectorXd qlam = sp.q0 + sp.Q.transpose() * lam;
  dp.x.resize(sp.n);
  for (int k = 0; k < sp.n; ++k) {
    const double sp_ = std::sqrt(plam(k)), sq = std::sqrt(qlam(k));
    const double xt = (sp_ * sp.low(k) + sq * sp.upp(k)) / (sp_ + sq);
    dp.x(k) = std::clamp(xt, sp.alfa(k), sp.beta(k));
  }
  dp.y = ((lam.array() - sp.c) / sp.d).max(0.0).matrix();

  const VectorXd ux = sp.upp - dp.x, xl = dp.x - sp.low;
  dp.grad = sp.P * ux.cwiseInverse() + sp.Q * xl.cwiseInverse() - dp.y - sp.b;
  dp.dpsidx = plam.cwiseQuotient(ux.cwiseAbs2()) - qlam.cwiseQuotient(xl.cwiseAbs2());
  dp.value = plam.cwiseQuotient(ux).sum() + qlam.cwiseQuotient(xl).sum() +
             sp.c * dp.y.sum() + 0.5 * sp.d * dp.y.squaredNorm() - lam.dot(dp.y + sp.b);

  dp.hess = Eigen::MatrixXd::Zero(sp.m, sp.m);
  for (int k = 0; k < sp.n; ++k) {
    if (dp.x(k) <= sp.alfa(k) || dp.x(k) >= sp.beta(k)) continue;  // clipped: x does not move
    const double ux2 = ux(k) * ux(k), xl2 = xl(k) * xl(k);
    const double h = 2.0 * (plam(k) / (ux2 * ux(k)) + qlam(k) / (xl2 * xl(k)));
    const VectorXd gk = sp.P.col(k) / ux2 - sp.Q.col(k) / xl2;
    dp.hess.noalias() -= gk * gk.transpose() / h;
  }
  for (int i = 0; i < sp.m; ++i)
    if (lam(i) > sp.c) dp.hess(i, i) -= 1.0 / sp.d;
  return dp;
}

// Maximizes the separable dual W(lam) over lam >= 0 by Newton on the barrier
// function W(lam) + epsilon sum ln lam_i, epsilon driven from 1 to `tol`,
// with an Armijo search on that function. The slack of constraint i is
// s_i = epsilon / lam_i, so each level ends on the primal-dual central path
//   dW/dlam + s = 0,   lam_i s_i = epsilon.
// The primal point is recovered in closed form; only m unknowns are iterated.
inline MmaMultipliers solve_subproblem(const Subproblem& sp, Eigen::VectorXd& x, double tol,
                                       int max_steps) {
  using Eigen::VectorXd;
  const int m = sp.m, n = sp.n;
  if (sp.a != 0.0) throw ContractError("MMA subproblem: only a = 0 is supported");

  VectorXd lam = VectorXd::Ones(m);
  DualPoint dp = dual_point(sp, lam);
  double epsi = 1.0;
  auto barrier = [&](const DualPoint& p, const VectorXd& l) {
    return p.value + epsi * l.array().log().sum();
  };

  for (;;) {
    VectorXd grad = dp.grad + epsi * lam.cwiseInverse();
    double resmax = grad.cwiseAbs().maxCoeff();
    int steps = 0;
    while (resmax > 0.9 * epsi && steps < max_steps) {
      ++steps;
      Eigen::MatrixXd A = -dp.hess;
      A.diagonal() += epsi * lam.cwiseAbs2().cwiseInverse();
      const VectorXd dlam = A.ldlt().solve(grad);

      double steg = 1.0;
      for (int i = 0; i < m; ++i)
        if (dlam(i) < 0.0) steg = std::min(steg, -0.99 * lam(i) / dlam(i));
      const double f_old = barrier(dp, lam), slope = grad.dot(dlam);
      const double slack = 1e-14 * (1.0 + std::abs(f_old));  // roundoff in f
      const VectorXd lamold = lam;
      for (int itto = 0; itto < 60; ++itto) {
        lam = lamold + steg * dlam;
        dp = dual_point(sp, lam);
        if (barrier(dp, lam) >= f_old + 1e-4 * steg * slope - slack) break;
        steg *= 0.5;
      }
      grad = dp.grad + epsi * lam.cwiseInverse();
      resmax = grad.cwiseAbs().maxCoeff();
    }
    if (!(resmax <= 0.9 * epsi)) {
      char msg[128];
      std::snprintf(msg, sizeof(msg),
                    "MMA subproblem did not converge (dual residual %.3e at epsilon %.1e)", resmax,
                    epsi);
      throw SolverError(msg, resmax);
    }
    if (epsi <= tol) break;
    epsi = std::max(0.1 * epsi, tol);
  }

  x = dp.x;
  MmaMultipliers out;
  out.lam = lam;
  out.s = epsi * lam.cwiseInverse();
  out.y = dp.y;
  out.z = 0.0;
  out.zet = sp.a0;
  out.mu = (VectorXd::Constant(m, sp.c) + sp.d * dp.y - lam).cwiseMax(0.0);
  out.xsi = VectorXd::Zero(n);
  out.eta = VectorXd::Zero(n);
  for (int k = 0; k < n; ++k) {
    if (x(k) <= sp.alfa(k)) out.xsi(k) = std::max(dp.dpsidx(k), 0.0);
    if (x(k) >= sp.beta(k)) out.eta(k) = std::max(-dp.dpsidx(k), 0.0);
  }
  return out;
}
}  // namespace detail

/// One MMA step on [0,1]^n. `dg` holds one gradient row per constraint.
/// Returns the new iterate; `state` carries asymptotes, history and the
/// multipliers of the subproblem just solved.
inline std::vector<double> mma_update(std::span<const double> z, double f0,
                                      std::span<const double> df0,
                                      std::span<const double> g,
                                      std::span<const std::vector<double>> dg, MmaState& state) {
  using Eigen::VectorXd;
  const int n = static_cast<int>(z.size());
  const int m = static_cast<int>(g.size());
  const MmaSettings& st = state.settings;
  if (n == 0 || m == 0) throw ContractError("mma_update: need at least one variable and constraint");
  if (df0.size() != z.size() || dg.size() != g.size())
    throw ContractError("mma_update: gradient dimensions do not match");
  auto finite = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double t) { return std::isfinite(t); });
  };
  if (!std::isfinite(f0) || !finite(df0) || !finite(g))
    throw ContractError("mma_update: non-finite objective, constraint or gradient");
  for (const auto& row : dg)
    if (row.size() != z.size() || !finite(row))
      throw ContractError("mma_update: non-finite or mis-sized constraint gradient");

  VectorXd x = Eigen::Map<const VectorXd>(z.data(), n);
  const VectorXd xmin = VectorXd::Zero(n), xmax = VectorXd::Ones(n);
  const VectorXd span_ = xmax - xmin;
  state.iteration += 1;

  if (state.iteration <= 2 || state.low.size() != n) {
    state.low = x - st.asy_init * span_;
    state.upp = x + st.asy_init * span_;
  } else {
    for (int k = 0; k < n; ++k) {
      double sgn = (x(k) - state.z_prev(k)) * (state.z_prev(k) - state.z_prev2(k));
      double factor = sgn > 0.0 ? st.asy_incr : (sgn < 0.0 ? st.asy_decr : 1.0);
      double lo = x(k) - factor * (state.z_prev(k) - state.low(k));
      double up = x(k) + factor * (state.upp(k) - state.z_prev(k));
      lo = std::clamp(lo, x(k) - st.asy_max_gap * span_(k), x(k) - st.asy_min_gap * span_(k));
      up = std::clamp(up, x(k) + st.asy_min_gap * span_(k), x(k) + st.asy_max_gap * span_(k));
      state.low(k) = lo;
      state.upp(k) = up;
    }
  }

  detail::Subproblem sp;
  sp.m = m;
  sp.n = n;
  sp.low = state.low;
  sp.upp = state.upp;
  sp.alfa.resize(n);
  sp.beta.resize(n);
  for (int k = 0; k < n; ++k) {
    sp.alfa(k) = std::max({state.low(k) + st.albefa * (x(k) - state.low(k)),
                           x(k) - st.move_limit * span_(k), xmin(k)});
    sp.beta(k) = std::min({state.upp(k) - st.albefa * (state.upp(k) - x(k)),
                           x(k) + st.move_limit * span_(k), xmax(k)});
  }

  const VectorXd xmamiinv = span_.cwiseMax(1e-5).cwiseInverse();
  const VectorXd ux1 = state.upp - x, xl1 = x - state.low;
  const VectorXd ux2 = ux1.cwiseAbs2(), xl2 = xl1.cwiseAbs2();
  const VectorXd df0v = Eigen::Map<const VectorXd>(df0.data(), n);
  VectorXd p0 = df0v.cwiseMax(0.0), q0 = (-df0v).cwiseMax(0.0);
  VectorXd pq0 = 0.001 * (p0 + q0) + st.raa0 * xmamiinv;
  sp.p0 = (p0 + pq0).cwiseProduct(ux2);
  sp.q0 = (q0 + pq0).cwiseProduct(xl2);
  sp.P.resize(m, n);
  sp.Q.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < n; ++k) {
      double dv = dg[i][k];
      double pp = std::max(dv, 0.0), qq = std::max(-dv, 0.0);
      double pq = 0.001 * (pp + qq) + st.raa0 * xmamiinv(k);
      sp.P(i, k) = (pp + pq) * ux2(k);
      sp.Q(i, k) = (qq + pq) * xl2(k);
    }
  sp.b = sp.P * ux1.cwiseInverse() + sp.Q * xl1.cwiseInverse();
  for (int i = 0; i < m; ++i) sp.b(i) -= g[i];
  sp.a0 = st.a0;
  sp.a = st.a;
  sp.c = st.c;
  sp.d = st.d;

  VectorXd xnew;
  state.multipliers = detail::solve_subproblem(sp, xnew, st.subproblem_tol, st.max_newton_steps);


  state.z_prev2 = state.z_prev.size() == n ? state.z_prev : x;
  state.z_prev = x;
  return {xnew.data(), xnew.data() + n};
}

/// Norm of the first-order optimality residual of
///   min f0  s.t. g <= 0, 0 <= z <= 1
/// at z: stationarity with constraint multipliers lam and bound multipliers
/// xsi (lower) and eta (upper), positive parts of g, and complementarity.
inline double kkt_residual(std::span<const double> z, std::span<const double> df0,
                           std::span<const double> g, std::span<const std::vector<double>> dg,
                           std::span<const double> lam, std::span<const double> xsi,
                           std::span<const double> eta) {
  const std::size_t n = z.size(), m = g.size();
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double r = df0[k] - xsi[k] + eta[k];
    for (std::size_t i = 0; i < m; ++i) r += lam[i] * dg[i][k];
    sum += r * r;
    sum += (xsi[k] * z[k]) * (xsi[k] * z[k]);
    sum += (eta[k] * (1.0 - z[k])) * (eta[k] * (1.0 - z[k]));
  }
  for (std::size_t i = 0; i < m; ++i) {
    double viol = std::max(g[i], 0.0);
    sum += viol * viol;
    sum += (lam[i] * g[i]) * (lam[i] * g[i]);
  }
  return std::sqrt(sum);
}

inline double kkt_residual(std::span<const double> z, std::span<const double> df0,
                           std::span<const double> g, std::span<const std::vector<double>> dg,
                           const MmaMultipliers& mult) {
  const auto n = static_cast<std::size_t>(mult.xsi.size());
  const auto m = static_cast<std::size_t>(mult.lam.size());
  if (n != z.size() || m != g.size()) throw ContractError("kkt_residual: multiplier size mismatch");
  return kkt_residual(z, df0, g, dg, {mult.lam.data(), m}, {mult.xsi.data(), n},
                      {mult.eta.data(), n});
}

}  // namespace polyto
