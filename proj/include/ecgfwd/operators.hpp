#pragma once

#include <span>
#include <vector>

#include "ecgfwd/mesh.hpp"
#include "ecgfwd/sparse.hpp"

namespace ecgfwd {

/// Nondimensional conductivities: sigma_i and sigma_e live in the heart,
/// sigma_t in the torso.
struct ConductivityMap {
  double sigma_i = 1.0;
  double sigma_e = 2.0;
  double sigma_t = 5.0;

  void validate() const;
  friend bool operator==(const ConductivityMap&, const ConductivityMap&) = default;
};

/// Per-region scalar conductivity used for one assembly. A region set to 0
/// contributes nothing, which restricts the operator to the other region.
struct RegionConductivity {
  double heart = 0.0;
  double torso = 0.0;
};

/// Discrete form of -div(sigma grad .) with linear elements.
struct StiffnessOperator {
  CsrMatrix matrix;
  /// 1 on vertices touched by a triangle with nonzero conductivity.
  std::vector<char> support;
  /// Lumped mass over the supporting regions; fixes the Neumann gauge.
  std::vector<double> support_mass;
};

StiffnessOperator assemble_stiffness(const TriMesh& mesh, RegionConductivity sigma);

enum class MassSupport { Heart, Torso, All, OuterBoundary };

/// Lumped (diagonal) mass. Entries are one third of the incident triangle
/// areas, or one half of the incident boundary-edge lengths for
/// OuterBoundary. Zero off the support.
struct MassOperator {
  MassSupport support = MassSupport::All;
  std::vector<double> diag;

  [[nodiscard]] std::size_t size() const { return diag.size(); }
  [[nodiscard]] double measure() const;
};

MassOperator lumped_mass(const TriMesh& mesh, MassSupport support);

struct NeumannOptions {
  double tol = 1e-13;
  /// Iteration cap = max_iter_factor * unknowns.
  int max_iter_factor = 50;
  bool enforce_compat = true;
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Preconditioned conjugate gradients for a symmetric positive
/// semi-definite matrix whose null space (on rows with a nonzero diagonal)
/// is spanned by `null_mask` (entries 0/1). Rows with a zero diagonal are
/// left at their initial value. The null component is projected out of every
/// preconditioned residual. `x` holds the initial guess on entry.
SolveStats pcg_singular(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                        std::span<const double> null_mask, double tol, int max_iter);

/// Pure-Neumann solve K u = rhs with zero support-mass-weighted mean. With
/// enforce_compat the rhs is first made orthogonal to the constants on the
/// support (subtracting a multiple of the support mass).
std::vector<double> solve_neumann(const StiffnessOperator& k, std::span<const double> rhs,
                                  const NeumannOptions& options = {}, SolveStats* stats = nullptr);

/// u - (1' M u) / (1' M 1), computed over M's support.
std::vector<double> remove_weighted_mean(std::span<const double> u, std::span<const double> mass);
double weighted_mean(std::span<const double> u, std::span<const double> mass);

/// sqrt(u' M u)
double l2_norm(const MassOperator& m, std::span<const double> u);
/// sum_i M_ii |u_i|
double l1_norm(const MassOperator& m, std::span<const double> u);

/// Accumulates sum_n dt * ||u^n||_{L1(M)} over time steps.
class SpaceTimeL1 {
 public:
  explicit SpaceTimeL1(const MassOperator& m) : mass_(&m) {}
  void add(double dt, std::span<const double> u) { total_ += dt * l1_norm(*mass_, u); }
  [[nodiscard]] double value() const { return total_; }

 private:
  const MassOperator* mass_;
  double total_ = 0.0;
};

}  // namespace ecgfwd
