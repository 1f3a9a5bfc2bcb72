#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "polyto/constraints.hpp"
#include "polyto/fea.hpp"

using namespace polyto;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

PolygonSet hexagon(std::vector<double> d) {
  PolygonSet p(1, 6);
  std::copy(d.begin(), d.end(), p.offsets(0).begin());
  return p;
}

}  // namespace

TEST_CASE("volume constraint") {
  auto mp = problem_library("mbb", 10, 5, 60, 30);
  auto g = [&](double r) {
    std::vector<double> rho(mp.num_elements(), r);
    return volume_constraint(rho, mp.element_area(), 0.5, mp.domain_area());
  };
  CHECK_THAT(g(0.5), WithinAbs(0.0, 1e-14));
  CHECK_THAT(g(1.0), WithinAbs(1.0, 1e-14));
  CHECK_THAT(g(0.25), WithinAbs(-0.5, 1e-14));

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> rho(mp.num_elements());
  for (double& r : rho) r = u(rng);
  double base = volume_constraint(rho, mp.element_area(), 0.4, mp.domain_area());
  for (double a : {0.0, 0.3, 0.77, 1.0}) {
    std::vector<double> s = rho;
    for (double& r : s) r *= a;
    CHECK_THAT(volume_constraint(s, mp.element_area(), 0.4, mp.domain_area()) + 1,
               WithinAbs(a * (base + 1), 1e-13));
  }
}

TEST_CASE("edge lengths from face offsets") {
  PolygonSet sq(1, 4);
  for (double& v : sq.offsets(0)) v = 1.0;
  for (double l : edge_lengths(0, sq)) CHECK_THAT(l, WithinAbs(2.0, 1e-14));

  for (double l : edge_lengths(0, hexagon({10, 10, 10, 10, 10, 10})))
    CHECK_THAT(l, WithinAbs(11.547005383792516, 1e-12));

  auto cut = edge_lengths(0, hexagon({10, 10, 25, 10, 10, 10}));
  CHECK_THAT(cut[2], WithinAbs((10 + 10 - 25) / std::sin(std::numbers::pi / 3), 1e-12));
  CHECK(cut[2] < 0.0);
  CHECK(polygon_vertices(0, hexagon({10, 10, 25, 10, 10, 10})).size() == 5);
}

TEST_CASE("edge lengths agree with measured vertex distances") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> c(-10, 10), a(0, 2 * std::numbers::pi), d(2.0, 6.0);
  int tested = 0;
  while (tested < 100) {
    int S = 3 + static_cast<int>(rng() % 8);
    PolygonSet p(1, S);
    p.cx(0) = c(rng);
    p.cy(0) = c(rng);
    p.alpha(0) = a(rng);
    for (double& v : p.offsets(0)) v = d(rng);
    auto l = edge_lengths(0, p);
    if (*std::min_element(l.begin(), l.end()) <= 1e-6) continue;
    ++tested;
    // Match each measured edge to the face its midpoint lies on.
    auto v = polygon_vertices(0, p);
    REQUIRE(v.size() == static_cast<std::size_t>(S));
    std::vector<int> hits(S, 0);
    for (std::size_t k = 0; k < v.size(); ++k) {
      const Point &a = v[k], &b = v[(k + 1) % v.size()];
      const double mx = 0.5 * (a.x + b.x), my = 0.5 * (a.y + b.y);
      int face = 0;
      double best = 1e300;
      for (int j = 0; j < S; ++j) {
        double s = std::abs(halfspace_sdf(mx, my, p.cx(0), p.cy(0), p.face_angle(0, j), p.d(0, j)));
        if (s < best) best = s, face = j;
      }
      REQUIRE(best < 1e-9);
      ++hits[face];
      REQUIRE_THAT(l[face], WithinAbs(std::hypot(b.x - a.x, b.y - a.y), 1e-9));
    }
    for (int h : hits) REQUIRE(h == 1);
  }
}

TEST_CASE("edge lengths ignore center and rotation") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 50);
  PolygonSet p(3, 5);
  for (int i = 0; i < 3; ++i)
    for (double& v : p.offsets(i)) v = 1 + u(rng) / 10;
  auto before = all_edge_lengths(p);
  for (int i = 0; i < 3; ++i) {
    p.cx(i) = u(rng);
    p.cy(i) = u(rng);
    p.alpha(i) = u(rng);
  }
  CHECK(all_edge_lengths(p) == before);
}

TEST_CASE("smooth minimum length") {
  std::vector<double> one = {3.0};
  CHECK(smooth_min_length(one) == 3.0);
  std::vector<double> four = {2, 2, 2, 2};
  CHECK_THAT(smooth_min_length(four), WithinAbs(2 - std::log(4.0), 1e-14));
  CHECK_THAT(smooth_min_length(four), WithinAbs(0.6137, 1e-4));
  std::vector<double> far = {5, 100};
  CHECK_THAT(smooth_min_length(far), WithinAbs(5.0, 1e-15));
  std::vector<double> huge = {-800, 900, 1000};
  CHECK_THAT(smooth_min_length(huge), WithinAbs(-800.0, 1e-12));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-5, 30);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> l(12);
    for (double& v : l) v = u(rng);
    double mn = *std::min_element(l.begin(), l.end());
    double s = smooth_min_length(l);
    CHECK(s <= mn);
    CHECK(s >= mn - std::log(12.0) - 1e-12);
  }
}

TEST_CASE("minimum length constraint") {
  CHECK(min_length_constraint(4.0, 4.0) == 0.0);
  CHECK(min_length_constraint(8.0, 4.0) == -1.0);
  CHECK(min_length_constraint(0.0, 4.0) == 1.0);
}

TEST_CASE("feasible length constraint guarantees the measured minimum") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> d(3.0, 12.0), a(0, 6.3);
  int feasible = 0;
  for (int t = 0; t < 2000; ++t) {
    PolygonSet p(2, 6);
    for (int i = 0; i < 2; ++i) {
      p.alpha(i) = a(rng);
      for (double& v : p.offsets(i)) v = d(rng);
    }
    const double l_star = 2.0;
    double g = min_length_constraint(smooth_min_length(all_edge_lengths(p)), l_star);
    if (g > 0) continue;
    ++feasible;
    REQUIRE(min_vertex_edge_length(p) >= l_star - 1e-9);
  }
  CHECK(feasible > 50);
}
