#include "ecgfwd/activation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "ecgfwd/errors.hpp"
#include "ecgfwd/parallel.hpp"

namespace ecgfwd {

std::size_t ActivationMap::count_activated() const {
  return static_cast<std::size_t>(std::count_if(psi.begin(), psi.end(), [](double p) { return activated(p); }));
}

double ActivationMap::max_finite() const {
  double m = -std::numeric_limits<double>::infinity();
  for (double p : psi) {
    if (activated(p)) m = std::max(m, p);
  }
  return m;
}

double ActivationMap::min_finite() const {
  double m = std::numeric_limits<double>::infinity();
  for (double p : psi) {
    if (activated(p)) m = std::min(m, p);
  }
  return m;
}

namespace {

// Largest value of the cubic piece on [t0, t1] and where it is attained.
std::pair<double, double> piece_max(const NaturalCubicSpline& s, std::size_t k) {
  const double t0 = s.knots()[k];
  const double t1 = s.knots()[k + 1];
  double best_t = t0;
  double best = s.piece(k, t0);
  auto consider = [&](double t) {
    const double val = s.piece(k, t);
    if (val > best) {
      best = val;
      best_t = t;
    }
  };
  consider(t1);
  // Interior extrema: real roots of c1 + 2 c2 x + 3 c3 x^2 in (0, h).
  const auto c = s.piece_coefficients(k);
  const double h = t1 - t0;
  const double qa = 3.0 * c[3];
  const double qb = 2.0 * c[2];
  const double qc = c[1];
  auto root = [&](double x) {
    if (x > 0.0 && x < h) consider(t0 + x);
  };
  if (qa == 0.0) {
    if (qb != 0.0) root(-qc / qb);
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      root((-qb - sq) / (2.0 * qa));
      root((-qb + sq) / (2.0 * qa));
    }
  }
  return {best, best_t};
}

}  // namespace

std::optional<double> first_upward_crossing(const NaturalCubicSpline& spline, double threshold,
                                            double tol) {
  const auto knots = spline.knots();
  for (std::size_t k = 0; k < spline.intervals(); ++k) {
    const double f0 = spline.piece(k, knots[k]) - threshold;
    if (f0 >= 0.0) {
      if (k == 0) return std::nullopt;  // starts at or above the threshold
      return knots[k];
    }
    const auto [peak, peak_t] = piece_max(spline, k);
    if (peak < threshold) continue;
    double lo = knots[k];
    double hi = peak_t;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (spline.piece(k, mid) - threshold < 0.0) lo = mid;
      else hi = mid;
    }
    return 0.5 * (lo + hi);
  }
  return std::nullopt;
}

ActivationMap compute_activation(const TriMesh& mesh, std::span<const double> times,
                                 const std::vector<std::vector<double>>& series, double threshold,
                                 int threads) {
  if (times.size() < 2 || series.size() != times.size()) {
    throw InvalidArgument("activation: need >= 2 time samples and one field per sample");
  }
  const double step = times[1] - times[0];
  for (std::size_t n = 1; n < times.size(); ++n) {
    if (std::abs((times[n] - times[n - 1]) - step) > 1e-9 * std::max(1.0, std::abs(times[n]))) {
      throw InvalidArgument("activation: time samples must be uniform");
    }
  }
  for (const auto& f : series) {
    if (f.size() != mesh.num_vertices()) throw InvalidArgument("activation: field size mismatch");
  }

  ActivationMap act;
  act.threshold = threshold;
  act.psi.assign(mesh.num_vertices(), std::numeric_limits<double>::quiet_NaN());
  const auto heart = mesh.heart_vertices();

  parallel_for(heart.size(), threads, [&](std::size_t a) {
    const std::int32_t g = heart[a];
    std::vector<double> values(times.size());
    for (std::size_t n = 0; n < times.size(); ++n) values[n] = series[n][g];
    if (values[0] >= threshold) {
      throw InvalidArgument(fmt::format("activation: vertex {} starts at or above the threshold", g));
    }
    const NaturalCubicSpline spline(times, values);
    const auto crossing = first_upward_crossing(spline, threshold);
    act.psi[g] = crossing ? *crossing : ActivationMap::kUnactivated;
  });

  if (act.count_activated() == 0) throw Error("no propagation: no vertex crosses the threshold");
  return act;
}

double mean_front_speed(const TriMesh& mesh, const ActivationMap& act) {
  const auto verts = mesh.vertices();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    if (tri.region != Region::Heart) continue;
    const double p0 = act.psi[tri.v[0]];
    const double p1 = act.psi[tri.v[1]];
    const double p2 = act.psi[tri.v[2]];
    if (!ActivationMap::activated(p0) || !ActivationMap::activated(p1) || !ActivationMap::activated(p2)) continue;
    const Vec2 a = verts[tri.v[0]];
    const Vec2 b = verts[tri.v[1]];
    const Vec2 c = verts[tri.v[2]];
    const double twice_area = 2.0 * mesh.signed_area(t);
    const double gx = ((p1 - p0) * (c.y - a.y) - (p2 - p0) * (b.y - a.y)) / twice_area;
    const double gy = ((p2 - p0) * (b.x - a.x) - (p1 - p0) * (c.x - a.x)) / twice_area;
    const double norm = std::hypot(gx, gy);
    if (norm > 0.0) {
      sum += 1.0 / norm;
      ++count;
    }
  }
  if (count == 0) throw Error("front speed: no heart triangle with a nonzero activation gradient");
  return sum / static_cast<double>(count);
}

}  // namespace ecgfwd
