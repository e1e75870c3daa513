#pragma once

#include <span>
#include <variant>
#include <vector>

#include "ecgfwd/activation.hpp"
#include "ecgfwd/ionic.hpp"
#include "ecgfwd/spline.hpp"

namespace ecgfwd {

/// Plateau of the pre-shaped fronts.
inline constexpr double kFrontPlateau = 0.94;

/// 0 for s < -eps, 0.94 for s > eps, cubic g in between (C1 at +-eps).
struct SmoothedHeaviside {
  double epsilon = 2.5;
};

/// Single-cell action potential, shifted so its 0.5 upstroke crossing sits
/// at s = 0.
struct Ms0dFront {
  NaturalCubicSpline trace;
  double offset = 0.0;
};

using FrontShape = std::variant<SmoothedHeaviside, Ms0dFront>;

double eval_front(const FrontShape& shape, double s);
double eval_front_deriv(const FrontShape& shape, double s);

/// Builds the MS0D front: integrates the single-cell model, splines the v
/// trace and centers it on its first 0.5 crossing.
Ms0dFront make_ms0d_front(const MSParams& p, const SmoothPulse& stim = {}, double dt = 0.01,
                          double T = 330.0);

/// vtilde(x_i, t) = V(t - psi_i) on heart vertices; 0 elsewhere.
/// Unactivated vertices (psi = +inf) get V(-inf) = 0.
std::vector<double> build_vtilde(const FrontShape& shape, std::span<const double> psi, double t);
/// d/dt of build_vtilde.
std::vector<double> build_vtilde_deriv(const FrontShape& shape, std::span<const double> psi, double t);

}  // namespace ecgfwd
