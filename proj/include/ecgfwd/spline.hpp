#pragma once

#include <array>
#include <span>
#include <vector>

namespace ecgfwd {

/// Interpolating cubic spline with natural end conditions (zero second
/// derivative at both ends). Outside the knot range the value is held at the
/// end value and the derivative is 0.
class NaturalCubicSpline {
 public:
  NaturalCubicSpline() = default;
  NaturalCubicSpline(std::span<const double> knots, std::span<const double> values);

  [[nodiscard]] double operator()(double t) const;
  [[nodiscard]] double derivative(double t) const;

  /// Value of the cubic piece on [knot k, knot k+1] at t (no clamping).
  [[nodiscard]] double piece(std::size_t k, double t) const;
  /// Power-basis coefficients of piece k in x = t - knot k:
  /// c[0] + c[1] x + c[2] x^2 + c[3] x^3.
  [[nodiscard]] std::array<double, 4> piece_coefficients(std::size_t k) const;

  [[nodiscard]] std::span<const double> knots() const { return t_; }
  [[nodiscard]] std::span<const double> values() const { return y_; }
  [[nodiscard]] std::size_t intervals() const { return t_.empty() ? 0 : t_.size() - 1; }

 private:
  [[nodiscard]] std::size_t locate(double t) const;

  std::vector<double> t_;
  std::vector<double> y_;
  std::vector<double> m_;  // second derivatives at the knots
};

}  // namespace ecgfwd
