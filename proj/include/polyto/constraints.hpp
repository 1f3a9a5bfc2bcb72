#pragma once
//
// Volume constraint and the polygon minimum-edge-length constraint.
//

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "polyto/error.hpp"
#include "polyto/geometry.hpp"

namespace polyto {

struct ConstraintConfig {
  double vf_star = 0.5;
  std::optional<double> l_star;  ///< absent disables the length constraint

  void validate() const {
    if (!(vf_star > 0.0 && vf_star <= 1.0)) throw ConfigError("constraints: need 0 < vf_star <= 1");
    if (l_star && !(*l_star > 0.0)) throw ConfigError("constraints: l_star must be > 0");
  }
};

/// sum(rho_e v_e) / (vf* |Omega|) - 1, for a uniform element area v_e.
inline double volume_constraint(std::span<const double> rho, double element_area, double vf_star,
                                double domain_area) {
  double vol = 0.0;
  for (double r : rho) vol += r;
  return vol * element_area / (vf_star * domain_area) - 1.0;
}

/// Edge lengths of polygon i from its face offsets. Negative entries mark
/// faces cut off by their neighbours.
inline std::vector<double> edge_lengths(int i, const PolygonSet& p) {
  const int S = p.S();
  const double g = p.gamma();
  const double c = std::cos(g), s = std::sin(g);
  std::vector<double> l(static_cast<std::size_t>(S));
  for (int j = 0; j < S; ++j) {
    double next = p.d(i, (j + 1) % S);
    double prev = p.d(i, (j + S - 1) % S);
    l[j] = (next + prev - 2.0 * p.d(i, j) * c) / s;
  }
  return l;
}

/// Lengths of every polygon, polygon-major (index i * S + j).
inline std::vector<double> all_edge_lengths(const PolygonSet& p) {
  std::vector<double> all;
  all.reserve(static_cast<std::size_t>(p.K()) * p.S());
  for (int i = 0; i < p.K(); ++i) {
    auto l = edge_lengths(i, p);
    all.insert(all.end(), l.begin(), l.end());
  }
  return all;
}

/// -LSE(-l). Lies in [min - ln n, min].
inline double smooth_min_length(std::span<const double> lengths) {
  if (lengths.empty()) throw ContractError("smooth_min_length: no lengths");
  std::vector<double> neg(lengths.size());
  for (std::size_t k = 0; k < lengths.size(); ++k) neg[k] = -lengths[k];
  return -log_sum_exp(neg);
}

/// As above, also returning d(l_min)/d(l_k) (softmin weights, summing to one).
inline double smooth_min_length(std::span<const double> lengths, std::span<double> weights) {
  if (lengths.empty()) throw ContractError("smooth_min_length: no lengths");
  std::vector<double> neg(lengths.size());
  for (std::size_t k = 0; k < lengths.size(); ++k) neg[k] = -lengths[k];
  return -log_sum_exp(neg, weights);
}

inline double min_length_constraint(double l_min, double l_star) { return 1.0 - l_min / l_star; }

}  // namespace polyto
