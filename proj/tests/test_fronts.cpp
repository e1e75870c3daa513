#include <doctest.h>

#include <cmath>
#include <limits>

#include "ecgfwd/fronts.hpp"

using namespace ecgfwd;

TEST_CASE("smoothed Heaviside values") {
  for (double eps : {0.5, 2.5, 5.0}) {
    const FrontShape f = SmoothedHeaviside{eps};
    CHECK(eval_front(f, -eps) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    CHECK(eval_front(f, eps) == doctest::Approx(0.94).epsilon(1e-15));
    CHECK(eval_front(f, -2.0 * eps) == 0.0);
    CHECK(eval_front(f, 2.0 * eps) == 0.94);
    CHECK(eval_front(f, 0.0) == doctest::Approx(0.47).epsilon(1e-15));
    CHECK(eval_front_deriv(f, 0.0) == doctest::Approx(0.705 / eps).epsilon(1e-14));
  }
}

TEST_CASE("smoothed Heaviside is C1 and monotone") {
  const double eps = 2.5;
  const FrontShape f = SmoothedHeaviside{eps};
  // At s = +-eps the cubic branch applies; just outside, the constant one.
  for (double s : {-eps, eps}) {
    const double outside = s * (1.0 + 1e-12);
    CHECK(std::abs(eval_front_deriv(f, s) - eval_front_deriv(f, outside)) < 1e-12);
    CHECK(std::abs(eval_front(f, s) - eval_front(f, outside)) < 1e-12);
  }
  double prev = eval_front(f, -eps);
  for (int k = 1; k <= 1000; ++k) {
    const double s = -eps + 2.0 * eps * k / 1000.0;
    const double v = eval_front(f, s);
    CHECK(v >= prev);
    CHECK(eval_front_deriv(f, s) >= 0.0);
    prev = v;
  }
  // Derivative matches a centered difference.
  const double h = 1e-6;
  for (double s : {-2.0, -0.7, 0.3, 1.9}) {
    const double fd = (eval_front(f, s + h) - eval_front(f, s - h)) / (2.0 * h);
    CHECK(eval_front_deriv(f, s) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("MS0D front is centered on its 0.5 crossing") {
  const FrontShape f = make_ms0d_front(MSParams{});
  CHECK(eval_front(f, 0.0) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(eval_front(f, -10.0) < 0.05);
  CHECK(eval_front(f, 10.0) > 0.9);
  CHECK(eval_front_deriv(f, 0.0) > 0.0);
}

TEST_CASE("vtilde composition") {
  const FrontShape f = SmoothedHeaviside{2.5};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<double> psi{10.0, 12.0, nan, ActivationMap::kUnactivated, 15.0};

  const auto early = build_vtilde(f, psi, 0.0);
  for (double x : early) CHECK(x == 0.0);
  const auto late = build_vtilde(f, psi, 15.0 + 2.5 + 1.0);
  CHECK(late[0] == 0.94);
  CHECK(late[1] == 0.94);
  CHECK(late[2] == 0.0);  // off the heart
  CHECK(late[3] == 0.0);  // never activated
  CHECK(late[4] == 0.94);

  const std::vector<double> uniform(5, 7.0);
  const auto u = build_vtilde(f, uniform, 8.0);
  for (double x : u) CHECK(x == eval_front(f, 1.0));
  const auto du = build_vtilde_deriv(f, uniform, 8.0);
  for (double x : du) CHECK(x == eval_front_deriv(f, 1.0));
}
