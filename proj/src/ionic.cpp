#include "ecgfwd/ionic.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "ecgfwd/errors.hpp"

namespace ecgfwd {

void MSParams::validate() const {
  if (!(tau_in > 0.0 && tau_out > 0.0 && tau_open > 0.0 && tau_close > 0.0)) {
    throw InvalidArgument("Mitchell-Schaeffer time constants must be > 0");
  }
  if (!(v_gate > 0.0 && v_gate < 1.0)) {
    throw InvalidArgument(fmt::format("v_gate must lie in (0, 1) (got {})", v_gate));
  }
}

MSRate ms_rhs(double v, double h, const MSParams& p) {
  const double dv = h * v * v * (1.0 - v) / p.tau_in - v / p.tau_out;
  const double dh = v < p.v_gate ? (1.0 - h) / p.tau_open : -h / p.tau_close;
  return {dv, dh};
}

double f_ms_reduced(double v, const MSParams& p) {
  return v * v * (1.0 - v) / p.tau_in - v / p.tau_out;
}

double ionic_term(double v, double h, const MSParams& p) { return -ms_rhs(v, h, p).dv; }

double SmoothPulse::operator()(double t) const {
  const double s = (t - t0) / half_width;
  if (amplitude == 0.0 || !(std::abs(s) < 1.0)) return 0.0;
  return amplitude * std::exp(1.0 - 1.0 / (1.0 - s * s));
}

Trace0D solve_ms_0d(const MSParams& p, const SmoothPulse& stim, double dt, double T) {
  p.validate();
  if (!(dt > 0.0)) throw InvalidArgument("ms0d: dt must be > 0");
  if (!(T >= 330.0)) throw InvalidArgument(fmt::format("ms0d: T must be >= 330 (got {})", T));

  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  Trace0D tr;
  tr.t.reserve(steps + 1);
  tr.v.reserve(steps + 1);
  tr.h.reserve(steps + 1);
  double v = 0.0;
  double h = 1.0;
  tr.t.push_back(0.0);
  tr.v.push_back(v);
  tr.h.push_back(h);

  // The gate switches branch at v = v_gate. A step that crosses it is split at
  // the crossing so RK4 keeps its order on each piece.
  struct State {
    double v;
    double h;
  };
  auto rk4 = [&](double t, State s, double step, bool open) {
    auto rate = [&](double tt, double vv, double hh) {
      const double dv = hh * vv * vv * (1.0 - vv) / p.tau_in - vv / p.tau_out + stim(tt);
      const double dh = open ? (1.0 - hh) / p.tau_open : -hh / p.tau_close;
      return MSRate{dv, dh};
    };
    const MSRate k1 = rate(t, s.v, s.h);
    const MSRate k2 = rate(t + 0.5 * step, s.v + 0.5 * step * k1.dv, s.h + 0.5 * step * k1.dh);
    const MSRate k3 = rate(t + 0.5 * step, s.v + 0.5 * step * k2.dv, s.h + 0.5 * step * k2.dh);
    const MSRate k4 = rate(t + step, s.v + step * k3.dv, s.h + step * k3.dh);
    return State{s.v + step / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv),
                 s.h + step / 6.0 * (k1.dh + 2.0 * k2.dh + 2.0 * k3.dh + k4.dh)};
  };
  for (std::size_t n = 0; n < steps; ++n) {
    const double t = static_cast<double>(n) * dt;
    const bool open = v < p.v_gate;
    State next = rk4(t, {v, h}, dt, open);
    if ((next.v < p.v_gate) != open) {
      double lo = 0.0;
      double hi = dt;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((rk4(t, {v, h}, mid, open).v < p.v_gate) == open ? lo : hi) = mid;
      }
      next = rk4(t + hi, rk4(t, {v, h}, hi, open), dt - hi, !open);
    }
    v = next.v;
    h = next.h;
    tr.t.push_back(static_cast<double>(n + 1) * dt);
    tr.v.push_back(v);
    tr.h.push_back(h);
  }
  if (stim.amplitude != 0.0 && *std::max_element(tr.v.begin(), tr.v.end()) < 0.5) {
    throw Error("ms0d: stimulus below threshold");
  }
  return tr;
}

CubicIonic fit_cubic_point(std::span<const IonicSample> samples) {
  if (samples.size() < 4) {
    throw InvalidArgument(fmt::format("cubic fit needs >= 4 samples (got {})", samples.size()));
  }
  // Basis: phi3 = v^2 (v - 0.94), phi2 = v (v - 0.94).
  double s33 = 0.0, s32 = 0.0, s22 = 0.0, s3f = 0.0, s2f = 0.0;
  for (const auto& [v, f] : samples) {
    const double phi2 = v * (v - CubicIonic::kPlateau);
    const double phi3 = v * phi2;
    s33 += phi3 * phi3;
    s32 += phi3 * phi2;
    s22 += phi2 * phi2;
    s3f += phi3 * f;
    s2f += phi2 * f;
  }
  const double det = s33 * s22 - s32 * s32;
  if (!(std::abs(det) > 1e-14 * std::max(s33 * s22, 1e-300))) {
    throw InvalidArgument("cubic fit: rank-deficient sample set");
  }
  const double c3 = (s3f * s22 - s2f * s32) / det;
  const double c2 = (s33 * s2f - s32 * s3f) / det;
  if (c3 == 0.0) throw InvalidArgument("cubic fit: vanishing leading coefficient");
  return {c3, -c2 / c3};
}

CubicIonic fit_cubic_ionic(std::span<const std::vector<IonicSample>> samples_per_point) {
  if (samples_per_point.empty()) throw InvalidArgument("cubic fit: no sample points");
  // Running mean, exact when all points agree.
  double a = 0.0;
  double r = 0.0;
  double count = 0.0;
  for (const auto& pts : samples_per_point) {
    const CubicIonic c = fit_cubic_point(pts);
    count += 1.0;
    a += (c.a - a) / count;
    r += (c.r - r) / count;
  }
  return {a, r};
}

}  // namespace ecgfwd
