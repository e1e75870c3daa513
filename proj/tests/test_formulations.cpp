#include <doctest.h>

#include <cmath>
#include <map>

#include "ecgfwd/errors.hpp"
#include "ecgfwd/formulations.hpp"
#include "ecgfwd/fronts.hpp"

using namespace ecgfwd;

namespace {

struct Setup {
  TriMesh mesh = generate_disk_in_disk({1.0, 3.0, 12, 48});
  OperatorSet ops = build_operators(mesh, ConductivityMap{});
  std::vector<double> mask = [this] {
    std::vector<double> m(mesh.num_vertices(), 0.0);
    for (auto g : mesh.heart_vertices()) m[g] = 1.0;
    return m;
  }();
};

const Setup& setup() {
  static const Setup s;
  return s;
}

std::vector<double> times_mask(const std::vector<double>& mask, double value) {
  std::vector<double> v(mask.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = mask[i] * value;
  return v;
}

}  // namespace

TEST_CASE("recipe names round-trip") {
  for (auto d : {DerivativeScheme::Analytic, DerivativeScheme::Sbdf2, DerivativeScheme::EulerCentered,
                 DerivativeScheme::EulerExplicit, DerivativeScheme::Recorded}) {
    for (auto i : {IonicChoice::Recorded, IonicChoice::FInt, IonicChoice::FMsWithH, IonicChoice::FMsReduced}) {
      const RhsRecipe r{d, i};
      CHECK(RhsRecipe::parse(r.name()) == r);
    }
  }
  CHECK(RhsRecipe::parse("recorded") == RhsRecipe{});
  CHECK(RhsRecipe{DerivativeScheme::Sbdf2, IonicChoice::FInt}.name() == "sbdf2+f_int");
  CHECK_THROWS_AS(RhsRecipe::parse("sbdf3+f_int"), InvalidArgument);
  CHECK_THROWS_AS(RhsRecipe::parse("sbdf2"), InvalidArgument);
}

TEST_CASE("finite differences are exact on linear-in-time data") {
  const auto& s = setup();
  const double dt = 0.1;
  const double c = 0.37;
  const double tn = 4.0;
  const auto vm2 = times_mask(s.mask, c * (tn - 2 * dt));
  const auto vm1 = times_mask(s.mask, c * (tn - dt));
  const auto v0 = times_mask(s.mask, c * tn);
  const auto vp1 = times_mask(s.mask, c * (tn + dt));
  F1Data d;
  d.dt = dt;
  d.v_prev2 = vm2;
  d.v_prev = vm1;
  d.v_cur = v0;
  d.v_next = vp1;
  d.heart_mask = s.mask;
  d.f_int = CubicIonic{0.0, 0.0};
  for (auto scheme : {DerivativeScheme::Sbdf2, DerivativeScheme::EulerCentered, DerivativeScheme::EulerExplicit}) {
    const auto rhs = f1_rhs(d, {scheme, IonicChoice::FInt});
    for (std::size_t i = 0; i < rhs.size(); ++i) {
      CHECK(rhs[i] == doctest::Approx(s.mask[i] * c).epsilon(1e-12).scale(1.0));
    }
  }

  // Constant in time: every scheme gives 0 up to rounding.
  d.v_prev2 = v0;
  d.v_prev = v0;
  d.v_next = v0;
  for (auto scheme : {DerivativeScheme::Sbdf2, DerivativeScheme::EulerCentered, DerivativeScheme::EulerExplicit}) {
    for (double x : f1_rhs(d, {scheme, IonicChoice::FInt})) CHECK(std::abs(x) <= 1e-13);
  }
}

TEST_CASE("ionic choices and the stimulus") {
  const auto& s = setup();
  const MSParams ms;
  const auto v = times_mask(s.mask, 0.5);
  const auto h = times_mask(s.mask, 0.8);
  const auto zero = times_mask(s.mask, 0.0);
  const auto stim = times_mask(s.mask, 0.05);
  F1Data d;
  d.dt = 0.1;
  d.v_cur = v;
  d.v_prev = v;
  d.v_prev2 = v;
  d.h_cur = h;
  d.heart_mask = s.mask;
  d.ms = &ms;
  d.f_int = CubicIonic{3.0, 0.1};
  d.stimulus = stim;
  const auto g = s.mesh.heart_vertices()[0];
  CHECK(f1_rhs(d, {DerivativeScheme::Sbdf2, IonicChoice::FInt})[g] ==
        doctest::Approx(CubicIonic{3.0, 0.1}(0.5) - 0.05).epsilon(1e-14));
  CHECK(f1_rhs(d, {DerivativeScheme::Sbdf2, IonicChoice::FMsWithH})[g] ==
        doctest::Approx(ionic_term(0.5, 0.8, ms) - 0.05).epsilon(1e-14));
  CHECK(f1_rhs(d, {DerivativeScheme::Sbdf2, IonicChoice::FMsReduced})[g] ==
        doctest::Approx(-f_ms_reduced(0.5, ms) - 0.05).epsilon(1e-14));

  // Recorded derivative with another ionic term strips the recorded reaction.
  const auto rhs = times_mask(s.mask, 2.0);
  const auto reaction = times_mask(s.mask, 0.5);
  d.recorded_rhs = rhs;
  d.recorded_reaction = reaction;
  CHECK(f1_rhs(d, {DerivativeScheme::Recorded, IonicChoice::FInt})[g] ==
        doctest::Approx(1.5 + CubicIonic{3.0, 0.1}(0.5) - 0.05).epsilon(1e-14));
  CHECK(f1_rhs(d, RhsRecipe{})[g] == 2.0);

  // Off-heart entries are zero.
  for (std::size_t i = 0; i < s.mask.size(); ++i) {
    if (s.mask[i] == 0.0) CHECK(f1_rhs(d, {DerivativeScheme::Sbdf2, IonicChoice::FInt})[i] == 0.0);
  }

  F1Data missing;
  missing.dt = 0.1;
  missing.heart_mask = s.mask;
  missing.v_cur = v;
  try {
    f1_rhs(missing, {DerivativeScheme::EulerCentered, IonicChoice::Recorded});
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("not available") != std::string::npos);
  }
  CHECK_THROWS_AS(f1_rhs(missing, {DerivativeScheme::EulerExplicit, IonicChoice::FInt}), InvalidArgument);
  (void)zero;
}

TEST_CASE("analytic and SBDF2 derivatives of a front agree to first order or better") {
  const auto& s = setup();
  const FrontShape front = SmoothedHeaviside{2.5};
  std::vector<double> psi(s.mesh.num_vertices(), std::nan(""));
  for (auto g : s.mesh.heart_vertices()) psi[g] = 5.0 + 2.0 * s.mesh.vertices()[g].x;
  const double t = 5.3;
  auto diff = [&](double dt) {
    const auto v0 = build_vtilde(front, psi, t);
    const auto v1 = build_vtilde(front, psi, t - dt);
    const auto v2 = build_vtilde(front, psi, t - 2 * dt);
    const auto dv = build_vtilde_deriv(front, psi, t);
    F1Data d;
    d.dt = dt;
    d.v_cur = v0;
    d.v_prev = v1;
    d.v_prev2 = v2;
    d.analytic_deriv = dv;
    d.heart_mask = s.mask;
    d.f_int = CubicIonic{0.0, 0.0};
    const auto a = f1_rhs(d, {DerivativeScheme::Analytic, IonicChoice::FInt});
    const auto b = f1_rhs(d, {DerivativeScheme::Sbdf2, IonicChoice::FInt});
    std::vector<double> e(a.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = a[i] - b[i];
    return l2_norm(s.ops.mass_heart, e);
  };
  const double e1 = diff(0.1);
  const double e2 = diff(0.05);
  MESSAGE("analytic vs SBDF2 ratio " << e1 / e2);
  CHECK(e1 / e2 >= 1.9);
}

TEST_CASE("source formulation") {
  const auto& s = setup();
  SUBCASE("zero rhs") {
    const auto u = solve_f1(s.ops, std::vector<double>(s.mesh.num_vertices(), 0.0)).u;
    for (double x : u) CHECK(x == 0.0);
  }
  SUBCASE("radially symmetric rhs gives a radially symmetric potential") {
    std::vector<double> rhs(s.mesh.num_vertices(), 0.0);
    for (auto g : s.mesh.heart_vertices()) {
      const Vec2 p = s.mesh.vertices()[g];
      rhs[g] = std::cos(M_PI * std::hypot(p.x, p.y));
    }
    const auto u = solve_f1(s.ops, rhs).u;
    std::map<long, std::pair<double, double>> by_ring;
    double amp = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const Vec2 p = s.mesh.vertices()[i];
      const long key = std::lround(std::hypot(p.x, p.y) * 1e6);
      auto [it, fresh] = by_ring.try_emplace(key, u[i], u[i]);
      if (!fresh) {
        it->second.first = std::min(it->second.first, u[i]);
        it->second.second = std::max(it->second.second, u[i]);
      }
      amp = std::max(amp, std::abs(u[i]));
    }
    double spread = 0.0;
    for (const auto& [k, mm] : by_ring) spread = std::max(spread, mm.second - mm.first);
    CHECK(amp > 0.0);
    CHECK(spread <= 0.05 * amp);
  }
}

TEST_CASE("balance formulation") {
  const auto& s = setup();
  SUBCASE("constant vtilde gives zero") {
    const auto u = solve_f2(s.ops, times_mask(s.mask, 0.94)).u;
    for (double x : u) CHECK(std::abs(x) <= 1e-12);
  }
  SUBCASE("linearity") {
    std::vector<double> v(s.mesh.num_vertices(), 0.0);
    for (auto g : s.mesh.heart_vertices()) {
      const Vec2 p = s.mesh.vertices()[g];
      v[g] = std::tanh(3.0 * p.x + p.y);
    }
    const auto u = solve_f2(s.ops, v).u;
    auto v2 = v;
    auto v3 = v;
    for (auto& x : v2) x *= 2.0;
    for (auto& x : v3) x *= -3.0;
    const auto u2 = solve_f2(s.ops, v2).u;
    const auto u3 = solve_f2(s.ops, v3).u;
    // Scaling by two is exact in floating point, so the solves agree bit for bit.
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(u2[i] == 2.0 * u[i]);
    std::vector<double> scaled(u);
    for (auto& x : scaled) x *= -3.0;
    CHECK(relative_error(s.ops, s.ops.mass_all, u3, scaled) <= 1e-10);
  }
  SUBCASE("non-finite input is rejected") {
    auto v = times_mask(s.mask, 0.5);
    v[s.mesh.heart_vertices()[0]] = std::nan("");
    CHECK_THROWS_AS(solve_f2(s.ops, v), InvalidArgument);
  }
}

TEST_CASE("relative error is scale invariant and gauge blind") {
  const auto& s = setup();
  std::vector<double> a(s.mesh.num_vertices()), b(s.mesh.num_vertices());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = std::sin(0.1 * static_cast<double>(i));
    b[i] = a[i] + 0.01 * std::cos(0.3 * static_cast<double>(i));
  }
  const double e = relative_error(s.ops, s.ops.mass_torso, a, b);
  auto a7 = a, b7 = b;
  for (auto& x : a7) x *= 7.0;
  for (auto& x : b7) x *= 7.0;
  CHECK(relative_error(s.ops, s.ops.mass_torso, a7, b7) == doctest::Approx(e).epsilon(1e-12));
  auto shifted = a;
  for (auto& x : shifted) x += 4.0;
  CHECK(relative_error(s.ops, s.ops.mass_torso, shifted, b) == doctest::Approx(e).epsilon(1e-10));
}
