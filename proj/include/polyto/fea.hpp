#pragma once
//
// Structured-mesh bilinear quad linear elasticity (plane stress) with SIMP
// material interpolation.
//
// Node (ix, iy) has index n = iy * (nelx + 1) + ix and DOFs (2n, 2n + 1) for
// (u_x, u_y); y increases upward. Element (ex, ey) has index ey * nelx + ex and
// nodes ordered counterclockwise from its lower-left corner.
//

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "polyto/error.hpp"
#include "polyto/geometry.hpp"

namespace polyto {

struct Material {
  double E0 = 1.0;
  double Emin = 1e-3;
  double nu = 0.3;
  double penal = 3.0;  ///< SIMP exponent p
};

using ElementMatrix = Eigen::Matrix<double, 8, 8>;

inline double simp_modulus(double rho, double penal, double E0, double Emin) {
  return Emin + (E0 - Emin) * std::pow(rho, penal);
}

inline double simp_modulus_derivative(double rho, double penal, double E0, double Emin) {
  return penal * std::pow(rho, penal - 1.0) * (E0 - Emin);
}

/// Unit-modulus plane-stress stiffness of a dx-by-dy bilinear quad, 2x2 Gauss.
inline ElementMatrix element_stiffness_unit(double nu, double dx, double dy) {
  Eigen::Matrix3d D;
  D << 1.0, nu, 0.0, nu, 1.0, 0.0, 0.0, 0.0, 0.5 * (1.0 - nu);
  D /= (1.0 - nu * nu);

  constexpr std::array<double, 4> xi_n = {-1.0, 1.0, 1.0, -1.0};
  constexpr std::array<double, 4> eta_n = {-1.0, -1.0, 1.0, 1.0};
  const double g = 1.0 / std::sqrt(3.0);
  const double detJ = 0.25 * dx * dy;

  ElementMatrix ke = ElementMatrix::Zero();
  for (double xi : {-g, g}) {
    for (double eta : {-g, g}) {
      Eigen::Matrix<double, 3, 8> B = Eigen::Matrix<double, 3, 8>::Zero();
      for (int a = 0; a < 4; ++a) {
        double dNdx = 0.25 * xi_n[a] * (1.0 + eta * eta_n[a]) * (2.0 / dx);
        double dNdy = 0.25 * eta_n[a] * (1.0 + xi * xi_n[a]) * (2.0 / dy);
        B(0, 2 * a) = dNdx;
        B(1, 2 * a + 1) = dNdy;
        B(2, 2 * a) = dNdy;
        B(2, 2 * a + 1) = dNdx;
      }
      ke.noalias() += B.transpose() * D * B * detJ;
    }
  }
  return ke;
}

struct MeshProblem {
  int nelx = 100;
  int nely = 50;
  double lx = 60.0;
  double ly = 30.0;
  Material material;
  std::vector<int> fixed_dofs;  ///< sorted, unique
  std::vector<double> load;     ///< one entry per DOF

  double dx() const noexcept { return lx / nelx; }
  double dy() const noexcept { return ly / nely; }
  int num_nodes() const noexcept { return (nelx + 1) * (nely + 1); }
  int num_dofs() const noexcept { return 2 * num_nodes(); }
  int num_elements() const noexcept { return nelx * nely; }
  int node(int ix, int iy) const noexcept { return iy * (nelx + 1) + ix; }
  double element_area() const noexcept { return dx() * dy(); }
  double domain_area() const noexcept { return lx * ly; }

  std::array<int, 8> element_dofs(int e) const noexcept {
    int ex = e % nelx, ey = e / nelx;
    std::array<int, 4> n = {node(ex, ey), node(ex + 1, ey), node(ex + 1, ey + 1),
                            node(ex, ey + 1)};
    std::array<int, 8> dofs{};
    for (int a = 0; a < 4; ++a) {
      dofs[2 * a] = 2 * n[a];
      dofs[2 * a + 1] = 2 * n[a] + 1;
    }
    return dofs;
  }

  std::vector<Point> element_centers() const {
    std::vector<Point> c;
    c.reserve(static_cast<std::size_t>(num_elements()));
    for (int ey = 0; ey < nely; ++ey)
      for (int ex = 0; ex < nelx; ++ex) c.push_back({(ex + 0.5) * dx(), (ey + 0.5) * dy()});
    return c;
  }

  void validate() const {
    if (nelx < 1 || nely < 1) throw ConfigError("mesh: nelx and nely must be >= 1");
    if (!(lx > 0.0) || !(ly > 0.0)) throw ConfigError("mesh: lx and ly must be > 0");
    const Material& m = material;
    if (!(m.Emin > 0.0) || !(m.E0 > m.Emin)) throw ConfigError("material: need E0 > Emin > 0");
    if (!(m.nu > 0.0 && m.nu < 0.5)) throw ConfigError("material: need 0 < nu < 0.5");
    if (!(m.penal >= 1.0)) throw ConfigError("material: SIMP exponent must be >= 1");
    if (fixed_dofs.empty()) throw ConfigError("mesh: no fixed DOFs");
    if (load.size() != static_cast<std::size_t>(num_dofs()))
      throw ConfigError("mesh: load vector has wrong length");
    for (int dof : fixed_dofs) {
      if (dof < 0 || dof >= num_dofs()) throw ConfigError("mesh: fixed DOF out of range");
      if (load[dof] != 0.0) throw ConfigError("mesh: load applied on a fixed DOF");
    }
  }
};

inline const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names = {"mid_cantilever", "mbb"};
  return names;
}

/// Benchmark boundary conditions with a unit downward point load.
inline MeshProblem problem_library(const std::string& name, int nelx, int nely, double lx,
                                   double ly, Material material = {}) {
  MeshProblem mp;
  mp.nelx = nelx;
  mp.nely = nely;
  mp.lx = lx;
  mp.ly = ly;
  mp.material = material;
  if (nelx < 1 || nely < 1) throw ConfigError("mesh: nelx and nely must be >= 1");
  mp.load.assign(static_cast<std::size_t>(mp.num_dofs()), 0.0);

  if (name == "mid_cantilever") {
    for (int iy = 0; iy <= nely; ++iy) {
      mp.fixed_dofs.push_back(2 * mp.node(0, iy));
      mp.fixed_dofs.push_back(2 * mp.node(0, iy) + 1);
    }
    int iy_load = static_cast<int>(std::lround(nely / 2.0));
    mp.load[2 * mp.node(nelx, iy_load) + 1] = -1.0;
  } else if (name == "mbb") {
    for (int iy = 0; iy <= nely; ++iy) mp.fixed_dofs.push_back(2 * mp.node(0, iy));
    mp.fixed_dofs.push_back(2 * mp.node(nelx, 0) + 1);
    mp.load[2 * mp.node(0, nely) + 1] = -1.0;
  } else {
    std::string valid;
    for (const auto& n : problem_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown problem '" + name + "' (valid: " + valid + ")");
  }
  std::sort(mp.fixed_dofs.begin(), mp.fixed_dofs.end());
  return mp;
}

/// K * v for the full (unconstrained) system, element by element.
inline std::vector<double> apply_stiffness(const MeshProblem& mp, std::span<const double> rho,
                                           std::span<const double> v) {
  const ElementMatrix k0 = element_stiffness_unit(mp.material.nu, mp.dx(), mp.dy());
  const Material& m = mp.material;
  std::vector<double> out(static_cast<std::size_t>(mp.num_dofs()), 0.0);
  for (int e = 0; e < mp.num_elements(); ++e) {
    auto dofs = mp.element_dofs(e);
    Eigen::Matrix<double, 8, 1> ve;
    for (int a = 0; a < 8; ++a) ve[a] = v[dofs[a]];
    Eigen::Matrix<double, 8, 1> ke_v = simp_modulus(rho[e], m.penal, m.E0, m.Emin) * (k0 * ve);
    for (int a = 0; a < 8; ++a) out[dofs[a]] += ke_v[a];
  }
  return out;
}

struct FeaSolution {
  using Factorization = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;

  std::vector<double> u;  ///< all DOFs, zero at fixed ones
  double compliance = 0.0;
  double residual = 0.0;  ///< relative residual of the reduced solve
  std::shared_ptr<const Factorization> factorization;

  bool empty() const noexcept { return u.empty(); }
};

/// Assembles and solves the reduced system on free DOFs. The sparsity pattern
/// and scatter map are computed once per mesh; each solve refactorizes.
class ElasticitySolver {
 public:
  static constexpr double kResidualTolerance = 1e-9;

  explicit ElasticitySolver(MeshProblem problem) : mp_(std::move(problem)) {
    mp_.validate();
    k0_ = element_stiffness_unit(mp_.material.nu, mp_.dx(), mp_.dy());

    free_index_.assign(static_cast<std::size_t>(mp_.num_dofs()), 0);
    for (int dof : mp_.fixed_dofs) free_index_[dof] = -1;
    int nfree = 0;
    for (int& idx : free_index_)
      if (idx == 0) idx = nfree++;
    num_free_ = nfree;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(mp_.num_elements()) * 64);
    for (int e = 0; e < mp_.num_elements(); ++e) {
      auto dofs = mp_.element_dofs(e);
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b) {
          int r = free_index_[dofs[a]], c = free_index_[dofs[b]];
          if (r >= 0 && c >= 0) trip.emplace_back(r, c, 1.0);
        }
    }
    pattern_.resize(num_free_, num_free_);
    pattern_.setFromTriplets(trip.begin(), trip.end());
    pattern_.makeCompressed();

    scatter_.assign(static_cast<std::size_t>(mp_.num_elements()) * 64, -1);
    const int* outer = pattern_.outerIndexPtr();
    const int* inner = pattern_.innerIndexPtr();
    for (int e = 0; e < mp_.num_elements(); ++e) {
      auto dofs = mp_.element_dofs(e);
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b) {
          int r = free_index_[dofs[a]], c = free_index_[dofs[b]];
          if (r < 0 || c < 0) continue;
          const int* first = inner + outer[c];
          const int* last = inner + outer[c + 1];
          scatter_[static_cast<std::size_t>(e) * 64 + a * 8 + b] =
              static_cast<int>(std::lower_bound(first, last, r) - inner);
        }
    }

    f_free_.resize(num_free_);
    for (int dof = 0; dof < mp_.num_dofs(); ++dof)
      if (free_index_[dof] >= 0) f_free_[free_index_[dof]] = mp_.load[dof];
  }

  const MeshProblem& problem() const noexcept { return mp_; }
  const ElementMatrix& unit_element_stiffness() const noexcept { return k0_; }
  int num_free_dofs() const noexcept { return num_free_; }

  /// Reduced stiffness on free DOFs for the given element moduli.
  Eigen::SparseMatrix<double> assemble(std::span<const double> moduli) const {
    if (moduli.size() != static_cast<std::size_t>(mp_.num_elements()))
      throw ContractError("assemble: one modulus per element required");
    Eigen::SparseMatrix<double> K = pattern_;
    double* val = K.valuePtr();
    std::fill(val, val + K.nonZeros(), 0.0);
    for (int e = 0; e < mp_.num_elements(); ++e) {
      const int* slot = scatter_.data() + static_cast<std::size_t>(e) * 64;
      for (int ab = 0; ab < 64; ++ab)
        if (slot[ab] >= 0) val[slot[ab]] += moduli[e] * k0_(ab / 8, ab % 8);
    }
    return K;
  }

  std::vector<double> moduli(std::span<const double> rho) const {
    const Material& m = mp_.material;
    std::vector<double> E(rho.size());
    for (std::size_t e = 0; e < rho.size(); ++e) E[e] = simp_modulus(rho[e], m.penal, m.E0, m.Emin);
    return E;
  }

  FeaSolution solve(std::span<const double> rho) const { return solve_moduli(moduli(rho)); }

  FeaSolution solve_moduli(std::span<const double> E) const {
    FeaSolution sol;
    sol.u.assign(static_cast<std::size_t>(mp_.num_dofs()), 0.0);
    if (f_free_.squaredNorm() == 0.0) return sol;

    Eigen::SparseMatrix<double> K = assemble(E);
    auto fact = std::make_shared<FeaSolution::Factorization>();
    fact->compute(K);
    if (fact->info() != Eigen::Success)
      throw SolverError("stiffness factorization failed: reduced system is singular "
                        "(insufficient constraints to remove rigid-body modes)");
    const Eigen::VectorXd& D = fact->vectorD();
    double dmax = D.cwiseAbs().maxCoeff();
    if (D.minCoeff() <= 1e-12 * dmax)
      throw SolverError("reduced stiffness is singular or indefinite: insufficient "
                        "constraints to remove rigid-body modes");

    Eigen::VectorXd uf = fact->solve(f_free_);
    Eigen::VectorXd r = K * uf - f_free_;
    double rel = r.norm() / f_free_.norm();
    if (rel > kResidualTolerance) {
      uf -= fact->solve(r);
      r = K * uf - f_free_;
      rel = r.norm() / f_free_.norm();
    }
    if (!(rel <= kResidualTolerance))
      throw SolverError("linear solve did not reach relative residual 1e-9 (achieved " +
                            std::to_string(rel) + ")",
                        rel);

    for (int dof = 0; dof < mp_.num_dofs(); ++dof)
      if (free_index_[dof] >= 0) sol.u[dof] = uf[free_index_[dof]];
    sol.compliance = f_free_.dot(uf);
    sol.residual = rel;
    sol.factorization = std::move(fact);
    return sol;
  }

  /// u_e^T k0 u_e for every element (strain energy at unit modulus, times 2).
  std::vector<double> element_energies(std::span<const double> u) const {
    std::vector<double> out(static_cast<std::size_t>(mp_.num_elements()));
    for (int e = 0; e < mp_.num_elements(); ++e) {
      auto dofs = mp_.element_dofs(e);
      Eigen::Matrix<double, 8, 1> ue;
      for (int a = 0; a < 8; ++a) ue[a] = u[dofs[a]];
      out[e] = ue.dot(k0_ * ue);
    }
    return out;
  }

 private:
  MeshProblem mp_;
  ElementMatrix k0_;
  std::vector<int> free_index_;
  int num_free_ = 0;
  Eigen::SparseMatrix<double> pattern_;
  std::vector<int> scatter_;
  Eigen::VectorXd f_free_;
};

inline FeaSolution assemble_solve(const DensityField& field, const MeshProblem& mp) {
  if (field.rho.size() != static_cast<std::size_t>(mp.num_elements()))
    throw ContractError("assemble_solve: density field does not match the mesh");
  return ElasticitySolver(mp).solve(field.rho);
}

}  // namespace polyto
