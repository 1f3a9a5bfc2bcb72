#pragma once
//
// Polygon parameterization and the differentiable polygon -> density map.
//
// A polygon is the intersection of S halfspaces whose outward normals are
// equiangular: face j of polygon i points along alpha[i] + 2*pi*j/S and sits
// at perpendicular distance d[i][j] from the center (cx[i], cy[i]).
//

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "polyto/error.hpp"

namespace polyto {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// ---------------------------------------------------------------------------
// Numerics
// ---------------------------------------------------------------------------

/// ln(sum_j exp(a_j)) evaluated in shifted form. `a` must be non-empty.
inline double log_sum_exp(std::span<const double> a) {
  double m = *std::max_element(a.begin(), a.end());
  double s = 0.0;
  for (double v : a) s += std::exp(v - m);
  return m + std::log(s);
}

/// Same as log_sum_exp, additionally writing the softmax weights d(LSE)/da_j.
inline double log_sum_exp(std::span<const double> a, std::span<double> weights) {
  double m = *std::max_element(a.begin(), a.end());
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    weights[j] = std::exp(a[j] - m);
    s += weights[j];
  }
  for (double& w : weights) w /= s;
  return m + std::log(s);
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

class PolygonSet {
 public:
  PolygonSet() = default;
  PolygonSet(int num_polygons, int num_sides)
      : K_(num_polygons),
        S_(num_sides),
        cx_(static_cast<std::size_t>(num_polygons), 0.0),
        cy_(static_cast<std::size_t>(num_polygons), 0.0),
        alpha_(static_cast<std::size_t>(num_polygons), 0.0),
        d_(static_cast<std::size_t>(num_polygons) * num_sides, 0.0) {
    if (num_polygons < 1) throw ConfigError("PolygonSet: K must be >= 1");
    if (num_sides < 3) throw ConfigError("PolygonSet: S must be >= 3");
  }

  int K() const noexcept { return K_; }
  int S() const noexcept { return S_; }

  double& cx(int i) { return cx_[i]; }
  double& cy(int i) { return cy_[i]; }
  double& alpha(int i) { return alpha_[i]; }
  double& d(int i, int j) { return d_[static_cast<std::size_t>(i) * S_ + j]; }
  double cx(int i) const { return cx_[i]; }
  double cy(int i) const { return cy_[i]; }
  double alpha(int i) const { return alpha_[i]; }
  double d(int i, int j) const { return d_[static_cast<std::size_t>(i) * S_ + j]; }

  std::span<const double> offsets(int i) const {
    return {d_.data() + static_cast<std::size_t>(i) * S_, static_cast<std::size_t>(S_)};
  }
  std::span<double> offsets(int i) {
    return {d_.data() + static_cast<std::size_t>(i) * S_, static_cast<std::size_t>(S_)};
  }

  /// Angle step between adjacent face normals.
  double gamma() const noexcept { return 2.0 * std::numbers::pi / S_; }

  /// Orientation of face j of polygon i. Always derived, never stored.
  double face_angle(int i, int j) const noexcept { return alpha_[i] + gamma() * j; }

  Point center(int i) const { return {cx_[i], cy_[i]}; }

  friend bool operator==(const PolygonSet&, const PolygonSet&) = default;

 private:
  int K_ = 0;
  int S_ = 0;
  std::vector<double> cx_, cy_, alpha_, d_;
};

struct Interval {
  double lower = 0.0;
  double upper = 1.0;
  double width() const noexcept { return upper - lower; }
};

struct DesignBounds {
  Interval cx, cy, alpha, d;

  /// cx in (0, lx), cy in (0, ly), alpha in (0, 2pi), d in (0, lx/2).
  static DesignBounds defaults(double lx, double ly) {
    return {{0.0, lx}, {0.0, ly}, {0.0, 2.0 * std::numbers::pi}, {0.0, 0.5 * lx}};
  }
};

/// Normalized optimization variables, laid out as [cx (K), cy (K), alpha (K), d (K*S)].
class DesignVector {
 public:
  DesignVector(int num_polygons, int num_sides, DesignBounds bounds, std::vector<double> z)
      : K_(num_polygons), S_(num_sides), bounds_(bounds), z_(std::move(z)) {
    if (z_.size() != size(K_, S_)) {
      throw ConfigError("DesignVector: expected " + std::to_string(size(K_, S_)) +
                        " entries for K=" + std::to_string(K_) + ", S=" + std::to_string(S_) +
                        ", got " + std::to_string(z_.size()));
    }
    for (const Interval* iv : {&bounds_.cx, &bounds_.cy, &bounds_.alpha, &bounds_.d}) {
      if (!std::isfinite(iv->lower) || !std::isfinite(iv->upper) || iv->lower > iv->upper)
        throw ConfigError("DesignVector: bounds must be finite with lower <= upper");
    }
  }

  static std::size_t size(int K, int S) {
    return static_cast<std::size_t>(K) * static_cast<std::size_t>(S + 3);
  }

  int K() const noexcept { return K_; }
  int S() const noexcept { return S_; }
  const DesignBounds& bounds() const noexcept { return bounds_; }
  std::span<const double> values() const noexcept { return z_; }
  std::vector<double>& values() noexcept { return z_; }
  std::size_t size() const noexcept { return z_.size(); }

  std::size_t cx_slot(int i) const noexcept { return static_cast<std::size_t>(i); }
  std::size_t cy_slot(int i) const noexcept { return static_cast<std::size_t>(K_ + i); }
  std::size_t alpha_slot(int i) const noexcept { return static_cast<std::size_t>(2 * K_ + i); }
  std::size_t d_slot(int i, int j) const noexcept {
    return static_cast<std::size_t>(3 * K_) + static_cast<std::size_t>(i) * S_ + j;
  }

  DesignVector with_values(std::vector<double> z) const { return {K_, S_, bounds_, std::move(z)}; }

 private:
  int K_, S_;
  DesignBounds bounds_;
  std::vector<double> z_;
};

inline PolygonSet unnormalize(const DesignVector& z) {
  PolygonSet p(z.K(), z.S());
  const auto& b = z.bounds();
  auto v = z.values();
  auto map = [](const Interval& iv, double t) { return iv.lower + iv.width() * t; };
  for (int i = 0; i < z.K(); ++i) {
    p.cx(i) = map(b.cx, v[z.cx_slot(i)]);
    p.cy(i) = map(b.cy, v[z.cy_slot(i)]);
    p.alpha(i) = map(b.alpha, v[z.alpha_slot(i)]);
    for (int j = 0; j < z.S(); ++j) p.d(i, j) = map(b.d, v[z.d_slot(i, j)]);
  }
  return p;
}

/// Inverse of unnormalize. Zero-width bounds map to 0.
inline DesignVector normalize(const PolygonSet& p, const DesignBounds& b) {
  std::vector<double> z(DesignVector::size(p.K(), p.S()));
  DesignVector out(p.K(), p.S(), b, std::move(z));
  auto& v = out.values();
  auto inv = [](const Interval& iv, double x) {
    return iv.width() > 0.0 ? (x - iv.lower) / iv.width() : 0.0;
  };
  for (int i = 0; i < p.K(); ++i) {
    v[out.cx_slot(i)] = inv(b.cx, p.cx(i));
    v[out.cy_slot(i)] = inv(b.cy, p.cy(i));
    v[out.alpha_slot(i)] = inv(b.alpha, p.alpha(i));
    for (int j = 0; j < p.S(); ++j) v[out.d_slot(i, j)] = inv(b.d, p.d(i, j));
  }
  return out;
}

struct ProjectionParams {
  double beta = 10.0;
  double q = 8.0;
  bool clamp_union = true;

  void validate() const {
    if (!(beta > 0.0)) throw ConfigError("projection: beta must be > 0");
    if (!(q >= 1.0)) throw ConfigError("projection: q must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Signed distances and projection
// ---------------------------------------------------------------------------

/// Signed distance to a halfspace boundary; negative inside.
inline double halfspace_sdf(double x, double y, double cx, double cy, double theta, double d) {
  return (x - cx) * std::cos(theta) + (y - cy) * std::sin(theta) - d;
}

/// LSE smooth-max over the S face distances of polygon i. Overestimates the
/// true max by at most ln S.
inline double polygon_sdf(double x, double y, int i, const PolygonSet& p) {
  std::vector<double> face(static_cast<std::size_t>(p.S()));
  for (int j = 0; j < p.S(); ++j)
    face[j] = halfspace_sdf(x, y, p.cx(i), p.cy(i), p.face_angle(i, j), p.d(i, j));
  return log_sum_exp(face);
}

/// Sigmoid mapping negative (inside) distances to density near one.
inline double project_density(double phi, double beta) {
  double t = beta * phi;
  if (t >= 0.0) {
    double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

/// q-norm union of per-polygon densities, optionally capped at one.
inline double union_density(std::span<const double> rho_hats, double q, bool clamp_union) {
  double m = 0.0;
  for (double r : rho_hats) m = std::max(m, r);
  if (m == 0.0) return 0.0;
  // Factor out the max so r^q cannot underflow to an all-zero sum.
  double s = 0.0;
  for (double r : rho_hats) s += std::pow(r / m, q);
  double rho = m * std::pow(s, 1.0 / q);
  return clamp_union ? std::min(rho, 1.0) : rho;
}

// ---------------------------------------------------------------------------
// Density field on element centers
// ---------------------------------------------------------------------------

struct DensityField {
  int num_polygons = 0;
  std::size_t num_elements = 0;
  std::vector<double> rho;      ///< final (possibly clamped) element densities
  std::vector<double> rho_raw;  ///< unclamped q-norm union
  std::vector<double> phi;      ///< per-polygon SDF, index k * num_elements + e
  std::vector<double> rho_hat;  ///< per-polygon projected density, same layout

  bool empty() const noexcept { return rho.empty(); }
  double phi_at(int k, std::size_t e) const { return phi[k * num_elements + e]; }
  double rho_hat_at(int k, std::size_t e) const { return rho_hat[k * num_elements + e]; }
  bool clamped(std::size_t e) const { return rho_raw[e] > rho[e]; }
};

inline DensityField density_field(const PolygonSet& p, std::span<const Point> centers,
                                  const ProjectionParams& proj) {
  DensityField f;
  const std::size_t ne = centers.size();
  const int K = p.K();
  f.num_polygons = K;
  f.num_elements = ne;
  f.rho.assign(ne, 0.0);
  f.rho_raw.assign(ne, 0.0);
  f.phi.assign(static_cast<std::size_t>(K) * ne, 0.0);
  f.rho_hat.assign(static_cast<std::size_t>(K) * ne, 0.0);

  std::vector<double> cosines(static_cast<std::size_t>(K) * p.S());
  std::vector<double> sines(cosines.size());
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < p.S(); ++j) {
      cosines[k * p.S() + j] = std::cos(p.face_angle(k, j));
      sines[k * p.S() + j] = std::sin(p.face_angle(k, j));
    }

  std::vector<double> face(static_cast<std::size_t>(p.S()));
  std::vector<double> hats(static_cast<std::size_t>(K));
  for (std::size_t e = 0; e < ne; ++e) {
    for (int k = 0; k < K; ++k) {
      double rx = centers[e].x - p.cx(k);
      double ry = centers[e].y - p.cy(k);
      for (int j = 0; j < p.S(); ++j)
        face[j] = rx * cosines[k * p.S() + j] + ry * sines[k * p.S() + j] - p.d(k, j);
      double phi = log_sum_exp(face);
      double rh = project_density(phi, proj.beta);
      f.phi[k * ne + e] = phi;
      f.rho_hat[k * ne + e] = rh;
      hats[k] = rh;
    }
    f.rho_raw[e] = union_density(hats, proj.q, false);
    f.rho[e] = proj.clamp_union ? std::min(f.rho_raw[e], 1.0) : f.rho_raw[e];
  }
  return f;
}

// ---------------------------------------------------------------------------
// Explicit geometry (export, oracles)
// ---------------------------------------------------------------------------

namespace detail {

// Sutherland-Hodgman step: keep the part of `poly` with n.x <= d.
inline std::vector<Point> clip_halfplane(const std::vector<Point>& poly, double nx, double ny,
                                         double d) {
  std::vector<Point> out;
  const std::size_t n = poly.size();
  if (n == 0) return out;
  out.reserve(n + 1);
  auto side = [&](const Point& q) { return q.x * nx + q.y * ny - d; };
  for (std::size_t k = 0; k < n; ++k) {
    const Point& a = poly[k];
    const Point& b = poly[(k + 1) % n];
    double sa = side(a), sb = side(b);
    if (sa <= 0.0) out.push_back(a);
    if ((sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0)) {
      double t = sa / (sa - sb);
      out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }
  return out;
}

}  // namespace detail

/// Exact boundary of polygon i, counterclockwise. Inactive faces contribute no
/// edge, so the result may have fewer than S vertices.
inline std::vector<Point> polygon_vertices(int i, const PolygonSet& p) {
  double dmax = 0.0;
  for (double v : p.offsets(i)) dmax = std::max(dmax, v);
  double h = 0.5 * (4.0 * dmax + 1.0);
  const double cx = p.cx(i), cy = p.cy(i);
  // Clip in center-relative coordinates, translate at the end.
  std::vector<Point> poly = {{-h, -h}, {h, -h}, {h, h}, {-h, h}};
  for (int j = 0; j < p.S(); ++j) {
    double th = p.face_angle(i, j);
    poly = detail::clip_halfplane(poly, std::cos(th), std::sin(th), p.d(i, j));
  }
  // Drop coincident vertices produced by faces that touch at a single point.
  std::vector<Point> out;
  double tol = 1e-12 * std::max(1.0, dmax);
  for (const Point& q : poly) {
    if (!out.empty() && std::hypot(q.x - out.back().x, q.y - out.back().y) <= tol) continue;
    out.push_back(q);
  }
  while (out.size() > 1 &&
         std::hypot(out.front().x - out.back().x, out.front().y - out.back().y) <= tol)
    out.pop_back();
  for (Point& q : out) {
    q.x += cx;
    q.y += cy;
  }
  return out;
}

/// Shoelace area of a simple polygon (positive for counterclockwise order).
inline double polygon_area(std::span<const Point> v) {
  double a = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Point& p = v[k];
    const Point& q = v[(k + 1) % v.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

/// Euclidean lengths of the edges of polygon i as measured on its vertices.
inline std::vector<double> vertex_edge_lengths(int i, const PolygonSet& p) {
  auto v = polygon_vertices(i, p);
  std::vector<double> out;
  if (v.size() < 2) return out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Point& a = v[k];
    const Point& b = v[(k + 1) % v.size()];
    out.push_back(std::hypot(b.x - a.x, b.y - a.y));
  }
  return out;
}

/// Smallest vertex-measured edge length over all polygons.
inline double min_vertex_edge_length(const PolygonSet& p) {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < p.K(); ++i)
    for (double l : vertex_edge_lengths(i, p)) m = std::min(m, l);
  return m;
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

/// Equi-spaced, equi-sized polygons on a kx-by-ky grid of cell centers.
inline PolygonSet init_grid(int K, int S, double lx, double ly, int kx, int ky, double radius,
                            double alpha0) {
  if (kx < 1 || ky < 1 || kx * ky != K)
    throw ConfigError("init_grid: grid " + std::to_string(kx) + "x" + std::to_string(ky) +
                      " does not hold K=" + std::to_string(K) + " polygons");
  if (!(radius > 0.0)) throw ConfigError("init_grid: radius must be > 0");
  PolygonSet p(K, S);
  int i = 0;
  for (int iy = 0; iy < ky; ++iy)
    for (int ix = 0; ix < kx; ++ix, ++i) {
      p.cx(i) = (ix + 0.5) * lx / kx;
      p.cy(i) = (iy + 0.5) * ly / ky;
      p.alpha(i) = alpha0;
      for (double& v : p.offsets(i)) v = radius;
    }
  return p;
}

/// Face offset for which K regular S-gons have total area `target_area`.
inline double radius_for_area(int K, int S, double alpha0, double target_area) {
  PolygonSet unit(1, S);
  unit.alpha(0) = alpha0;
  for (double& v : unit.offsets(0)) v = 1.0;
  double a1 = polygon_area(polygon_vertices(0, unit));
  return std::sqrt(target_area / (K * a1));
}

}  // namespace polyto
