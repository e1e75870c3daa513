#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ecgfwd/mesh.hpp"
#include "ecgfwd/spline.hpp"

namespace ecgfwd {

/// psi holds one entry per mesh vertex: the activation time on activated
/// heart vertices, +infinity on heart vertices that never cross (so that a
/// front evaluated at t - psi is at rest there), NaN off the heart.
struct ActivationMap {
  static constexpr double kUnactivated = std::numeric_limits<double>::infinity();

  std::vector<double> psi;
  double threshold = 0.5;

  [[nodiscard]] static bool activated(double value) { return std::isfinite(value); }
  [[nodiscard]] std::size_t count_activated() const;
  [[nodiscard]] double max_finite() const;
  [[nodiscard]] double min_finite() const;
};

/// Earliest t where the spline crosses `threshold` upwards, to within
/// `tol` in time. Each knot interval is scanned in order using the exact
/// extrema of its cubic piece, then the crossing is bisected.
std::optional<double> first_upward_crossing(const NaturalCubicSpline& spline, double threshold,
                                            double tol = 1e-10);

/// Per heart vertex: natural cubic spline through (t_n, v_n), then the first
/// upward crossing of the threshold. `series[n]` is the full nodal field at
/// `times[n]`; steps must be uniform and every heart vertex must start below
/// the threshold. Throws when no vertex activates.
ActivationMap compute_activation(const TriMesh& mesh, std::span<const double> times,
                                 const std::vector<std::vector<double>>& series,
                                 double threshold = 0.5, int threads = 1);

/// Mean front speed: average over heart triangles (all three vertices
/// activated, nonzero gradient) of 1 / |grad psi| for the affine interpolant.
double mean_front_speed(const TriMesh& mesh, const ActivationMap& act);

}  // namespace ecgfwd
