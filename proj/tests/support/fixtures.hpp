#pragma once

#include <random>
#include <vector>

#include "polyto/driver.hpp"

namespace fixtures {

/// Small mid-cantilever used for gradient checks: K=2 squares on a 12x6 mesh.
inline polyto::RunConfig gradient_config() {
  return polyto::parse_config(nlohmann::json::parse(R"({
    "problem": {"name": "mid_cantilever", "nelx": 12, "nely": 6, "lx": 60, "ly": 30},
    "polygons": {"K": 2, "S": 4},
    "constraints": {"vf_star": 0.5, "l_star": 5.0}
  })"));
}

/// Interior point of the unit box, reproducible from the seed.
inline std::vector<double> random_design(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  std::vector<double> z(n);
  for (double& v : z) v = u(rng);
  return z;
}

}  // namespace fixtures
