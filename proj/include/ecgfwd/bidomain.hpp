#pragma once

#include <memory>
#include <vector>

#include "ecgfwd/ionic.hpp"
#include "ecgfwd/mesh.hpp"
#include "ecgfwd/operators.hpp"

namespace ecgfwd {

/// Additive current in the v equation on heart vertices within `radius` of
/// `center`, with a smooth time profile.
struct Stimulus {
  Vec2 center{13.6, 0.0};
  double radius = 1.5;
  SmoothPulse pulse{0.2, 5.0, 3.0};

  friend bool operator==(const Stimulus&, const Stimulus&) = default;
};

struct BidomainConfig {
  std::shared_ptr<const TriMesh> mesh;
  ConductivityMap conductivity{};
  MSParams ionic{};
  double dt = 0.1;
  double T = 50.0;
  Stimulus stimulus{};
  double solver_tol = 1e-15;
  int max_iter_factor = 50;

  void validate() const;
};

/// Operators shared by the reference solver and both formulations.
struct OperatorSet {
  StiffnessOperator intra;      // sigma_i on HEART only
  StiffnessOperator balance;    // sigma_i + sigma_e on HEART, sigma_t on TORSO
  StiffnessOperator source;     // sigma_e on HEART, sigma_t on TORSO
  MassOperator mass_heart;
  MassOperator mass_torso;
  MassOperator mass_all;
  MassOperator mass_outer;
};

OperatorSet build_operators(const TriMesh& mesh, const ConductivityMap& sigma);

/// Time series produced by run_bidomain. All nodal arrays are full length
/// (one entry per mesh vertex); heart-only quantities are 0 off the heart.
struct BidomainRun {
  std::shared_ptr<const TriMesh> mesh;
  BidomainConfig config;
  std::vector<double> times;
  std::vector<std::vector<double>> v;
  std::vector<std::vector<double>> u;
  std::vector<std::vector<double>> h;
  /// (1.5 v^n - 2 v^{n-1} + 0.5 v^{n-2}) / dt + reaction^n as realized by the
  /// solver (first-order variant at n = 1, zero at n = 0).
  std::vector<std::vector<double>> recorded_rhs;
  /// 2 I(v^{n-1}, h^{n-1}) - I(v^{n-2}, h^{n-2}) - stim(t_n) (I(v^0, h^0) -
  /// stim(t_1) at n = 1). This is the ionic part of recorded_rhs.
  std::vector<std::vector<double>> recorded_reaction;
  std::vector<int> iterations;

  [[nodiscard]] std::size_t steps() const { return times.size(); }
  [[nodiscard]] double dt() const { return config.dt; }
  /// u_i = v + u on heart vertices, 0 elsewhere.
  [[nodiscard]] std::vector<double> intracellular(std::size_t step) const;
};

/// Stimulus indicator on mesh vertices (1 inside the stimulus disk on heart
/// vertices, 0 elsewhere).
std::vector<double> stimulus_mask(const TriMesh& mesh, const Stimulus& stim);

/// Semi-implicit BDF2 integration of the bidomain system in its balance form.
/// Each step solves the symmetric coupled system for (v on heart vertices,
/// u on all vertices), with the reaction extrapolated from the two previous
/// steps and the gate advanced explicitly. The first step uses the
/// first-order variant.
BidomainRun run_bidomain(const BidomainConfig& config);

}  // namespace ecgfwd
