#include "ecgfwd/fronts.hpp"

#include <cmath>

#include "ecgfwd/errors.hpp"

namespace ecgfwd {
namespace {

struct ValueVisitor {
  double s;
  double operator()(const SmoothedHeaviside& f) const {
    if (s < -f.epsilon) return 0.0;
    if (s > f.epsilon) return kFrontPlateau;
    const double x = s / f.epsilon;
    return kFrontPlateau * (-0.25 * x * x * x + 0.75 * x + 0.5);
  }
  double operator()(const Ms0dFront& f) const { return f.trace(s + f.offset); }
};

struct DerivVisitor {
  double s;
  double operator()(const SmoothedHeaviside& f) const {
    if (s < -f.epsilon || s > f.epsilon) return 0.0;
    const double x = s / f.epsilon;
    return kFrontPlateau * (0.75 - 0.75 * x * x) / f.epsilon;
  }
  double operator()(const Ms0dFront& f) const { return f.trace.derivative(s + f.offset); }
};

template <typename Visitor>
std::vector<double> compose(const FrontShape& shape, std::span<const double> psi, double t) {
  std::vector<double> out(psi.size(), 0.0);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (std::isnan(psi[i])) continue;
    out[i] = std::visit(Visitor{t - psi[i]}, shape);
  }
  return out;
}

}  // namespace

double eval_front(const FrontShape& shape, double s) { return std::visit(ValueVisitor{s}, shape); }

double eval_front_deriv(const FrontShape& shape, double s) { return std::visit(DerivVisitor{s}, shape); }

Ms0dFront make_ms0d_front(const MSParams& p, const SmoothPulse& stim, double dt, double T) {
  const Trace0D trace = solve_ms_0d(p, stim, dt, T);
  Ms0dFront front{NaturalCubicSpline(trace.t, trace.v), 0.0};
  const auto crossing = first_upward_crossing(front.trace, 0.5);
  if (!crossing) throw Error("ms0d front: trace never crosses 0.5");
  front.offset = *crossing;
  return front;
}

std::vector<double> build_vtilde(const FrontShape& shape, std::span<const double> psi, double t) {
  return compose<ValueVisitor>(shape, psi, t);
}

std::vector<double> build_vtilde_deriv(const FrontShape& shape, std::span<const double> psi, double t) {
  return compose<DerivVisitor>(shape, psi, t);
}

}  // namespace ecgfwd
