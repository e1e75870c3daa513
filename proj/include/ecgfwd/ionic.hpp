#pragma once

#include <span>
#include <utility>
#include <vector>

namespace ecgfwd {

/// Mitchell-Schaeffer time constants and gate threshold.
struct MSParams {
  double tau_in = 0.3;
  double tau_out = 6.0;
  double tau_open = 120.0;
  double tau_close = 150.0;
  double v_gate = 0.13;

  void validate() const;
  friend bool operator==(const MSParams&, const MSParams&) = default;
};

struct MSRate {
  double dv;
  double dh;
};

/// Right-hand side of the two-variable model. The gate closes as
/// dh = -h / tau_close above v_gate.
MSRate ms_rhs(double v, double h, const MSParams& p);

/// v^2 (1 - v) / tau_in - v / tau_out, i.e. ms_rhs(v, 1).dv.
double f_ms_reduced(double v, const MSParams& p);

/// Ionic term as it enters the source of the extracellular problem:
/// d_t v + I_ion(v, h) = div(sigma_i grad u_i), so I_ion = -ms_rhs(v, h).dv.
double ionic_term(double v, double h, const MSParams& p);

/// C-infinity bump A exp(1 - 1 / (1 - ((t - t0) / w)^2)) on |t - t0| < w.
struct SmoothPulse {
  double amplitude = 0.1;
  double t0 = 5.0;
  double half_width = 3.0;

  [[nodiscard]] double operator()(double t) const;
  friend bool operator==(const SmoothPulse&, const SmoothPulse&) = default;
};

struct Trace0D {
  std::vector<double> t;
  std::vector<double> v;
  std::vector<double> h;
};

/// Classical RK4 on the single-cell model with the pulse added to dv.
/// Requires T >= 330. Throws when a nonzero pulse fails to excite (max v < 0.5).
Trace0D solve_ms_0d(const MSParams& p, const SmoothPulse& stim, double dt, double T);

/// f(v) = a v (v - 0.94) (v - r); zero at 0 and 0.94 by construction.
struct CubicIonic {
  static constexpr double kPlateau = 0.94;
  double a = 0.0;
  double r = 0.0;

  [[nodiscard]] double operator()(double v) const { return a * v * (v - kPlateau) * (v - r); }
};

using IonicSample = std::pair<double, double>;  // (v, f)

/// Least-squares fit of one point's samples; see fit_cubic_ionic.
CubicIonic fit_cubic_point(std::span<const IonicSample> samples);

/// Per point, fits f = v (v - 0.94) (c3 v + c2) by linear least squares,
/// giving a = c3 and r = -c2 / c3; returns the mean (a, r) over points.
CubicIonic fit_cubic_ionic(std::span<const std::vector<IonicSample>> samples_per_point);

}  // namespace ecgfwd
