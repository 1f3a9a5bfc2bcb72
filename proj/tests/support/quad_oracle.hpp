#pragma once
//
// Independent quad-precision (__float128) recomputation of compliance, volume
// constraint and minimum-length constraint from a normalized design vector.
//
// Used as the finite-difference oracle for the analytic gradients: central
// differences with h = 1e-6 in double lose ~10 digits to cancellation, in
// quad precision they lose none that matter. Shares no code path with the
// library beyond the boundary-condition data from problem_library.
//

#include <quadmath.h>

#include <span>
#include <vector>

#include "polyto/driver.hpp"

namespace oracle {

using quad = __float128;

inline quad Q(double v) { return static_cast<quad>(v); }

struct Params {
  int K, S;
  quad lo[4], width[4];  // cx, cy, alpha, d
};

inline Params params_of(const polyto::RunConfig& c) {
  auto b = c.design_bounds();
  Params p{c.polygons.K, c.polygons.S, {}, {}};
  const polyto::Interval* iv[4] = {&b.cx, &b.cy, &b.alpha, &b.d};
  for (int k = 0; k < 4; ++k) {
    p.lo[k] = Q(iv[k]->lower);
    p.width[k] = Q(iv[k]->upper) - Q(iv[k]->lower);
  }
  return p;
}

struct Poly {
  std::vector<quad> cx, cy, alpha, d;
};

inline Poly unpack(const Params& p, std::span<const quad> z) {
  Poly g;
  for (int i = 0; i < p.K; ++i) {
    g.cx.push_back(p.lo[0] + p.width[0] * z[i]);
    g.cy.push_back(p.lo[1] + p.width[1] * z[p.K + i]);
    g.alpha.push_back(p.lo[2] + p.width[2] * z[2 * p.K + i]);
  }
  for (int k = 0; k < p.K * p.S; ++k) g.d.push_back(p.lo[3] + p.width[3] * z[3 * p.K + k]);
  return g;
}

inline quad lse(const std::vector<quad>& a) {
  quad m = a[0];
  for (quad v : a)
    if (v > m) m = v;
  quad s = 0;
  for (quad v : a) s += expq(v - m);
  return m + logq(s);
}

inline std::vector<quad> densities(const polyto::RunConfig& c, std::span<const quad> z) {
  const Params p = params_of(c);
  const Poly g = unpack(p, z);
  const int nelx = c.problem.nelx, nely = c.problem.nely;
  const quad dx = Q(c.problem.lx) / nelx, dy = Q(c.problem.ly) / nely;
  const quad two_pi = 2 * acosq(Q(-1));
  const quad beta = Q(c.projection.beta), q = Q(c.projection.q);
  std::vector<quad> rho;
  for (int ey = 0; ey < nely; ++ey)
    for (int ex = 0; ex < nelx; ++ex) {
      const quad x = (ex + Q(0.5)) * dx, y = (ey + Q(0.5)) * dy;
      quad sum = 0;
      for (int i = 0; i < p.K; ++i) {
        std::vector<quad> face;
        for (int j = 0; j < p.S; ++j) {
          quad th = g.alpha[i] + two_pi * j / p.S;
          face.push_back((x - g.cx[i]) * cosq(th) + (y - g.cy[i]) * sinq(th) - g.d[i * p.S + j]);
        }
        quad rh = 1 / (1 + expq(beta * lse(face)));
        sum += powq(rh, q);
      }
      quad r = sum > 0 ? powq(sum, 1 / q) : 0;
      if (c.projection.clamp_union && r > 1) r = 1;
      rho.push_back(r);
    }
  return rho;
}

inline quad volume_constraint(const polyto::RunConfig& c, std::span<const quad> z) {
  auto rho = densities(c, z);
  quad s = 0;
  for (quad r : rho) s += r;
  const quad area = Q(c.problem.lx) * Q(c.problem.ly);
  return s * (area / rho.size()) / (Q(c.constraints.vf_star) * area) - 1;
}

inline quad min_length_constraint(const polyto::RunConfig& c, std::span<const quad> z) {
  const Params p = params_of(c);
  const Poly g = unpack(p, z);
  const quad gam = 2 * acosq(Q(-1)) / p.S;
  std::vector<quad> neg;
  for (int i = 0; i < p.K; ++i)
    for (int j = 0; j < p.S; ++j) {
      quad next = g.d[i * p.S + (j + 1) % p.S], prev = g.d[i * p.S + (j + p.S - 1) % p.S];
      neg.push_back(-(next + prev - 2 * g.d[i * p.S + j] * cosq(gam)) / sinq(gam));
    }
  return 1 + lse(neg) / Q(*c.constraints.l_star);
}

/// Plane-stress bilinear quad, unit modulus, 2x2 Gauss.
inline std::vector<quad> element_matrix(quad nu, quad dx, quad dy) {
  std::vector<quad> ke(64, 0);
  const quad D[3][3] = {{1 / (1 - nu * nu), nu / (1 - nu * nu), 0},
                        {nu / (1 - nu * nu), 1 / (1 - nu * nu), 0},
                        {0, 0, (1 - nu) / (2 * (1 - nu * nu))}};
  const int xs[4] = {-1, 1, 1, -1}, ys[4] = {-1, -1, 1, 1};
  const quad gp = 1 / sqrtq(3);
  for (quad xi : {-gp, gp})
    for (quad eta : {-gp, gp}) {
      quad B[3][8] = {};
      for (int a = 0; a < 4; ++a) {
        quad dNdx = xs[a] * (1 + eta * ys[a]) / (2 * dx);
        quad dNdy = ys[a] * (1 + xi * xs[a]) / (2 * dy);
        B[0][2 * a] = dNdx;
        B[1][2 * a + 1] = dNdy;
        B[2][2 * a] = dNdy;
        B[2][2 * a + 1] = dNdx;
      }
      for (int r = 0; r < 8; ++r)
        for (int s = 0; s < 8; ++s) {
          quad v = 0;
          for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) v += B[i][r] * D[i][k] * B[k][s];
          ke[r * 8 + s] += v * dx * dy / 4;
        }
    }
  return ke;
}

/// Compliance via a banded dense Cholesky of the reduced stiffness.
inline quad compliance(const polyto::RunConfig& c, std::span<const quad> z) {
  const auto mp = c.mesh_problem();
  const auto rho = densities(c, z);
  const int ndof = mp.num_dofs();
  std::vector<int> map(ndof, 0);
  for (int f : mp.fixed_dofs) map[f] = -1;
  int n = 0;
  for (int& m : map)
    if (m == 0) m = n++;

  const auto ke = element_matrix(Q(mp.material.nu), Q(mp.lx) / mp.nelx, Q(mp.ly) / mp.nely);
  std::vector<quad> A(static_cast<std::size_t>(n) * n, 0);
  int band = 0;
  for (int ey = 0; ey < mp.nely; ++ey)
    for (int ex = 0; ex < mp.nelx; ++ex) {
      const int e = ey * mp.nelx + ex;
      const int nodes[4] = {ey * (mp.nelx + 1) + ex, ey * (mp.nelx + 1) + ex + 1,
                            (ey + 1) * (mp.nelx + 1) + ex + 1, (ey + 1) * (mp.nelx + 1) + ex};
      int dofs[8];
      for (int a = 0; a < 4; ++a) {
        dofs[2 * a] = map[2 * nodes[a]];
        dofs[2 * a + 1] = map[2 * nodes[a] + 1];
      }
      const quad E = Q(mp.material.Emin) +
                     (Q(mp.material.E0) - Q(mp.material.Emin)) * powq(rho[e], Q(mp.material.penal));
      for (int r = 0; r < 8; ++r)
        for (int s = 0; s < 8; ++s) {
          if (dofs[r] < 0 || dofs[s] < 0) continue;
          A[static_cast<std::size_t>(dofs[r]) * n + dofs[s]] += E * ke[r * 8 + s];
          band = std::max(band, std::abs(dofs[r] - dofs[s]));
        }
    }
  std::vector<quad> f(n, 0);
  for (int d = 0; d < ndof; ++d)
    if (map[d] >= 0) f[map[d]] = Q(mp.load[d]);

  // In-place banded Cholesky, lower factor stored in A.
  for (int j = 0; j < n; ++j) {
    const int k0 = std::max(0, j - band);
    quad s = A[static_cast<std::size_t>(j) * n + j];
    for (int k = k0; k < j; ++k) s -= A[static_cast<std::size_t>(j) * n + k] * A[static_cast<std::size_t>(j) * n + k];
    const quad ljj = sqrtq(s);
    A[static_cast<std::size_t>(j) * n + j] = ljj;
    for (int i = j + 1; i <= std::min(n - 1, j + band); ++i) {
      quad t = A[static_cast<std::size_t>(i) * n + j];
      for (int k = std::max(k0, i - band); k < j; ++k)
        t -= A[static_cast<std::size_t>(i) * n + k] * A[static_cast<std::size_t>(j) * n + k];
      A[static_cast<std::size_t>(i) * n + j] = t / ljj;
    }
  }
  // J = f^T K^{-1} f = |L^{-1} f|^2.
  std::vector<quad> y(f);
  for (int i = 0; i < n; ++i) {
    for (int k = std::max(0, i - band); k < i; ++k) y[i] -= A[static_cast<std::size_t>(i) * n + k] * y[k];
    y[i] /= A[static_cast<std::size_t>(i) * n + i];
  }
  quad J = 0;
  for (quad v : y) J += v * v;
  return J;
}

}  // namespace oracle
