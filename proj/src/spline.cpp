#include "ecgfwd/spline.hpp"

#include <algorithm>

#include "ecgfwd/errors.hpp"

namespace ecgfwd {

NaturalCubicSpline::NaturalCubicSpline(std::span<const double> knots, std::span<const double> values)
    : t_(knots.begin(), knots.end()), y_(values.begin(), values.end()) {
  const std::size_t n = t_.size();
  if (n < 2 || n != y_.size()) throw InvalidArgument("spline needs >= 2 knots and matching values");
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(t_[i + 1] > t_[i])) throw InvalidArgument("spline knots must be strictly increasing");
  }
  m_.assign(n, 0.0);
  if (n == 2) return;

  // Tridiagonal system for the interior second derivatives (Thomas algorithm).
  const std::size_t k = n - 2;
  std::vector<double> diag(k), upper(k), rhs(k);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = t_[i] - t_[i - 1];
    const double h1 = t_[i + 1] - t_[i];
    diag[i - 1] = 2.0 * (h0 + h1);
    upper[i - 1] = h1;
    rhs[i - 1] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
  }
  for (std::size_t i = 1; i < k; ++i) {
    const double w = upper[i - 1] / diag[i - 1];  // symmetric: lower(i) == upper(i-1)
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  m_[k] = rhs[k - 1] / diag[k - 1];
  for (std::size_t i = k - 1; i >= 1; --i) {
    m_[i] = (rhs[i - 1] - upper[i - 1] * m_[i + 1]) / diag[i - 1];
  }
}

std::size_t NaturalCubicSpline::locate(double t) const {
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  const auto idx = static_cast<std::size_t>(it - t_.begin());
  return std::clamp<std::size_t>(idx == 0 ? 0 : idx - 1, 0, t_.size() - 2);
}

double NaturalCubicSpline::piece(std::size_t k, double t) const {
  const double h = t_[k + 1] - t_[k];
  const double a = (t_[k + 1] - t) / h;
  const double b = (t - t_[k]) / h;
  return a * y_[k] + b * y_[k + 1] + ((a * a * a - a) * m_[k] + (b * b * b - b) * m_[k + 1]) * h * h / 6.0;
}

std::array<double, 4> NaturalCubicSpline::piece_coefficients(std::size_t k) const {
  const double h = t_[k + 1] - t_[k];
  return {y_[k], (y_[k + 1] - y_[k]) / h - h * (2.0 * m_[k] + m_[k + 1]) / 6.0, 0.5 * m_[k],
          (m_[k + 1] - m_[k]) / (6.0 * h)};
}

double NaturalCubicSpline::operator()(double t) const {
  if (t <= t_.front()) return y_.front();
  if (t >= t_.back()) return y_.back();
  return piece(locate(t), t);
}

double NaturalCubicSpline::derivative(double t) const {
  if (t < t_.front() || t > t_.back()) return 0.0;
  const std::size_t k = locate(t);
  const double h = t_[k + 1] - t_[k];
  const double a = (t_[k + 1] - t) / h;
  const double b = (t - t_[k]) / h;
  return (y_[k + 1] - y_[k]) / h + ((1.0 - 3.0 * a * a) * m_[k] + (3.0 * b * b - 1.0) * m_[k + 1]) * h / 6.0;
}

}  // namespace ecgfwd
