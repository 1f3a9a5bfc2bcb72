#pragma once
//
// Gradients of compliance, volume and minimum-length constraints with respect
// to the normalized design vector, plus a central-difference checker.
//
// The density chain is differentiated by hand:
//   z -> (cx, cy, alpha, d) -> face distances -> LSE -> sigmoid -> q-norm union
// and compliance uses the self-adjoint identity dJ/drho_e = -E'(rho_e) u_e^T k0 u_e.
//

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "polyto/constraints.hpp"
#include "polyto/error.hpp"
#include "polyto/fea.hpp"
#include "polyto/geometry.hpp"

namespace polyto {

struct GradientBundle {
  std::vector<double> dJ_dz;
  std::vector<double> dgv_dz;
  std::vector<double> dgl_dz;  ///< empty when no length constraint is configured
};

/// Pulls an element-wise sensitivity dF/drho back to dF/dz. Elements whose
/// union is clamped at one contribute nothing.
inline std::vector<double> density_pullback(const DesignVector& z, const DensityField& field,
                                            std::span<const Point> centers,
                                            const ProjectionParams& proj,
                                            std::span<const double> dF_drho) {
  if (field.empty() || field.num_elements != centers.size() ||
      dF_drho.size() != field.num_elements || field.num_polygons != z.K())
    throw ContractError("density_pullback: density field cache does not match the design");

  const PolygonSet p = unnormalize(z);
  const int K = p.K(), S = p.S();
  std::vector<double> g_cx(K, 0.0), g_cy(K, 0.0), g_alpha(K, 0.0);
  std::vector<double> g_d(static_cast<std::size_t>(K) * S, 0.0);

  std::vector<double> cosines(static_cast<std::size_t>(K) * S), sines(cosines.size());
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < S; ++j) {
      cosines[k * S + j] = std::cos(p.face_angle(k, j));
      sines[k * S + j] = std::sin(p.face_angle(k, j));
    }

  std::vector<double> face(S), w(S);
  for (std::size_t e = 0; e < field.num_elements; ++e) {
    const double dF = dF_drho[e];
    const double rho = field.rho_raw[e];
    if (dF == 0.0 || rho == 0.0) continue;
    if (proj.clamp_union && field.clamped(e)) continue;

    for (int k = 0; k < K; ++k) {
      const double rh = field.rho_hat_at(k, e);
      if (rh == 0.0) continue;
      const double phi = field.phi_at(k, e);
      const double drho_drh = std::pow(rh / rho, proj.q - 1.0);
      const double drh_dphi =
          -proj.beta * project_density(phi, proj.beta) * project_density(-phi, proj.beta);
      const double g = dF * drho_drh * drh_dphi;
      if (g == 0.0) continue;

      const double rx = centers[e].x - p.cx(k);
      const double ry = centers[e].y - p.cy(k);
      for (int j = 0; j < S; ++j)
        face[j] = rx * cosines[k * S + j] + ry * sines[k * S + j] - p.d(k, j);
      log_sum_exp(face, w);
      for (int j = 0; j < S; ++j) {
        const double c = cosines[k * S + j], s = sines[k * S + j];
        const double gw = g * w[j];
        g_cx[k] -= gw * c;
        g_cy[k] -= gw * s;
        g_alpha[k] += gw * (-rx * s + ry * c);
        g_d[k * S + j] -= gw;
      }
    }
  }

  const DesignBounds& b = z.bounds();
  std::vector<double> out(z.size(), 0.0);
  for (int k = 0; k < K; ++k) {
    out[z.cx_slot(k)] = g_cx[k] * b.cx.width();
    out[z.cy_slot(k)] = g_cy[k] * b.cy.width();
    out[z.alpha_slot(k)] = g_alpha[k] * b.alpha.width();
    for (int j = 0; j < S; ++j) out[z.d_slot(k, j)] = g_d[k * S + j] * b.d.width();
  }
  return out;
}

/// dJ/drho_e for compliance. Every entry is <= 0.
inline std::vector<double> compliance_density_sensitivity(const ElasticitySolver& solver,
                                                          const FeaSolution& sol,
                                                          const DensityField& field) {
  const MeshProblem& mp = solver.problem();
  if (sol.empty() || field.empty() ||
      field.rho.size() != static_cast<std::size_t>(mp.num_elements()))
    throw ContractError("grad_objective: missing FEA solution or density field cache");
  const Material& m = mp.material;
  auto energy = solver.element_energies(sol.u);
  std::vector<double> out(energy.size());
  for (std::size_t e = 0; e < energy.size(); ++e)
    out[e] = -simp_modulus_derivative(field.rho[e], m.penal, m.E0, m.Emin) * energy[e];
  return out;
}

inline std::vector<double> grad_objective(const DesignVector& z, const ElasticitySolver& solver,
                                          const FeaSolution& sol, const DensityField& field,
                                          const ProjectionParams& proj) {
  auto dJ_drho = compliance_density_sensitivity(solver, sol, field);
  auto centers = solver.problem().element_centers();
  return density_pullback(z, field, centers, proj, dJ_drho);
}

inline std::vector<double> grad_volume(const DesignVector& z, const MeshProblem& mp,
                                       const DensityField& field, const ProjectionParams& proj,
                                       double vf_star) {
  if (field.empty()) throw ContractError("grad_volume: missing density field cache");
  std::vector<double> dgv_drho(field.num_elements,
                               mp.element_area() / (vf_star * mp.domain_area()));
  auto centers = mp.element_centers();
  return density_pullback(z, field, centers, proj, dgv_drho);
}

/// Nonzero only on the K*S face-offset slots.
inline std::vector<double> grad_minlength(const DesignVector& z, double l_star) {
  if (!(l_star > 0.0)) throw ContractError("grad_minlength: l_star must be configured and > 0");
  const PolygonSet p = unnormalize(z);
  const int K = p.K(), S = p.S();
  auto lengths = all_edge_lengths(p);
  std::vector<double> w(lengths.size());
  smooth_min_length(lengths, w);

  const double c = std::cos(p.gamma()), s = std::sin(p.gamma());
  const double width = z.bounds().d.width();
  std::vector<double> out(z.size(), 0.0);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < S; ++j) {
      const double dg_dl = -w[i * S + j] / l_star;
      out[z.d_slot(i, (j + 1) % S)] += dg_dl / s * width;
      out[z.d_slot(i, (j + S - 1) % S)] += dg_dl / s * width;
      out[z.d_slot(i, j)] += dg_dl * (-2.0 * c / s) * width;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Finite-difference verification
// ---------------------------------------------------------------------------

struct FdReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;        ///< coordinates compared
  std::size_t skipped_floor = 0;  ///< analytic magnitude below the floor
  std::size_t skipped_kink = 0;   ///< FD unstable under step refinement
  std::vector<double> fd;         ///< finite-difference gradient, all coordinates
};

template <class Real>
using ScalarFunctionT = std::function<Real(std::span<const Real>)>;
using ScalarFunction = ScalarFunctionT<double>;

/// Compares `analytic` against central differences of f at z. Coordinates
/// closer than 2h to the [0,1] box use a one-sided second-order stencil.
/// A coordinate is treated as sitting on a kink (and skipped) when its FD
/// estimate moves by more than 1% when the step is cut to h/10.
///
/// `Real` is the arithmetic the perturbed points and differences are formed
/// in; a wider type than double removes cancellation noise from the FD
/// estimate when f is also evaluated in that type.
template <class Real>
FdReport fd_check(const ScalarFunctionT<Real>& f, std::span<const double> z,
                  std::span<const double> analytic, double h = 1e-6, double floor = 1e-8) {
  if (!(h > 0.0)) throw ContractError("fd_check: h must be > 0");
  if (analytic.size() != z.size()) throw ContractError("fd_check: gradient size mismatch");

  std::vector<Real> x(z.begin(), z.end());
  auto eval = [&](std::size_t i, Real xi) {
    const Real saved = x[i];
    x[i] = xi;
    const Real v = f(x);
    x[i] = saved;
    if (!std::isfinite(static_cast<double>(v)))
      throw ContractError("fd_check: non-finite function value perturbing coordinate " +
                          std::to_string(i));
    return v;
  };
  auto derivative = [&](std::size_t i, double step_d) -> double {
    const Real step = static_cast<Real>(step_d);
    const Real zi = static_cast<Real>(z[i]);
    const Real two = static_cast<Real>(2), three = static_cast<Real>(3), four = static_cast<Real>(4);
    if (z[i] - step_d >= 0.0 && z[i] + step_d <= 1.0)
      return static_cast<double>((eval(i, zi + step) - eval(i, zi - step)) / (two * step));
    const Real f0 = eval(i, zi);
    if (z[i] + 2.0 * step_d <= 1.0)
      return static_cast<double>(
          (-three * f0 + four * eval(i, zi + step) - eval(i, zi + two * step)) /
          (two * step));
    return static_cast<double>(
        (three * f0 - four * eval(i, zi - step) + eval(i, zi - two * step)) /
        (two * step));
  };

  FdReport rep;
  rep.fd.assign(z.size(), 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double fd = derivative(i, h);
    rep.fd[i] = fd;
    const double a = analytic[i];
    if (std::abs(a) <= floor) {
      ++rep.skipped_floor;
      continue;
    }
    const double rel = std::abs(a - fd) / std::max(std::abs(a), std::abs(fd));
    if (rel > 0.0) {
      const double fine = derivative(i, h / 10.0);
      if (std::abs(fine - fd) > 1e-2 * std::max({std::abs(fd), std::abs(fine), floor})) {
        ++rep.skipped_kink;
        continue;
      }
    }
    ++rep.checked;
    if (rel > rep.max_rel_error) {
      rep.max_rel_error = rel;
      rep.worst_index = i;
    }
  }
  return rep;
}

inline FdReport fd_check(const ScalarFunction& f, std::span<const double> z,
                         std::span<const double> analytic, double h = 1e-6,
                         double floor = 1e-8) {
  return fd_check<double>(f, z, analytic, h, floor);
}

}  // namespace polyto
