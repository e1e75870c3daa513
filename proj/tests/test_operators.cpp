#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "ecgfwd/bidomain.hpp"
#include "ecgfwd/errors.hpp"
#include "ecgfwd/operators.hpp"

using namespace ecgfwd;

namespace {

Eigen::MatrixXd dense(const CsrMatrix& a) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
  const auto rp = a.row_ptr();
  const auto ci = a.col_index();
  const auto v = a.values();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (auto e = rp[r]; e < rp[r + 1]; ++e) d(static_cast<Eigen::Index>(r), ci[e]) = v[e];
  }
  return d;
}

double manufactured_error(int rings, int sectors) {
  const TriMesh mesh = generate_disk_in_disk({0.5, 1.0, rings, sectors});
  const auto k = assemble_stiffness(mesh, {1.0, 1.0});
  const auto m = lumped_mass(mesh, MassSupport::All);
  std::vector<double> rhs(mesh.num_vertices()), exact(mesh.num_vertices());
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    const Vec2 p = mesh.vertices()[i];
    const double r2 = p.x * p.x + p.y * p.y;
    rhs[i] = m.diag[i] * (8.0 - 16.0 * r2);
    exact[i] = (1.0 - r2) * (1.0 - r2);
  }
  const auto u = solve_neumann(k, rhs);
  const auto ex = remove_weighted_mean(exact, m.diag);
  std::vector<double> d(u.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = u[i] - ex[i];
  return l2_norm(m, d) / l2_norm(m, ex);
}

const char* kUnitRight =
    "3 1 1\n0 0\n1 0\n0 1\n0 1 2 1\n0 1 1\n";

}  // namespace

TEST_CASE("unit right triangle: known local matrix with zero row sums") {
  const TriMesh m = parse_mesh(kUnitRight);
  const auto k = assemble_stiffness(m, {1.0, 0.0});
  const double expect[3][3] = {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
  for (std::size_t i = 0; i < 3; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(k.matrix.at(i, j) == doctest::Approx(expect[i][j]).epsilon(1e-15));
      row += k.matrix.at(i, j);
    }
    CHECK(row == 0.0);
  }
}

TEST_CASE("stiffness is linear in sigma, symmetric and annihilates constants") {
  const TriMesh m = generate_disk_in_disk({1.0, 3.0, 6, 24});
  const auto k1 = assemble_stiffness(m, {1.0, 5.0});
  const auto k2 = assemble_stiffness(m, {2.0, 10.0});
  const auto v1 = k1.matrix.values();
  const auto v2 = k2.matrix.values();
  REQUIRE(v1.size() == v2.size());
  for (std::size_t e = 0; e < v1.size(); ++e) CHECK(v2[e] == 2.0 * v1[e]);
  CHECK(k1.matrix.max_asymmetry() == 0.0);
  const std::vector<double> ones(m.num_vertices(), 1.0);
  for (double x : k1.matrix.multiply(ones)) CHECK(std::abs(x) <= 1e-12 * k1.matrix.max_abs());
  CHECK_THROWS_AS(assemble_stiffness(m, {-1.0, 1.0}), InvalidArgument);
}

TEST_CASE("heart-only stiffness is supported on heart vertices only") {
  const TriMesh m = generate_disk_in_disk({1.0, 3.0, 6, 24});
  const auto k = assemble_stiffness(m, {1.0, 0.0});
  std::size_t supported = 0;
  for (std::size_t i = 0; i < m.num_vertices(); ++i) {
    CHECK(static_cast<bool>(k.support[i]) == (m.heart_index(static_cast<std::int32_t>(i)) >= 0));
    supported += k.support[i] != 0;
  }
  CHECK(supported == m.heart_vertices().size());
}

TEST_CASE("dense eigensolve: one zero eigenvalue, the rest positive") {
  const TriMesh m = generate_disk_in_disk({1.0, 3.0, 4, 16});
  const auto k = assemble_stiffness(m, {1.0, 1.0});
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(k.matrix));
  const auto& ev = es.eigenvalues();
  const double scale = ev.maxCoeff();
  CHECK(std::abs(ev(0)) <= 1e-12 * scale);
  CHECK(ev(1) > 1e-6 * scale);
}

TEST_CASE("pure Neumann solve") {
  const TriMesh m = generate_disk_in_disk({1.0, 3.0, 8, 32});
  const auto k = assemble_stiffness(m, {3.0, 5.0});
  const auto mass = lumped_mass(m, MassSupport::All);

  SUBCASE("zero rhs gives zero") {
    const auto u = solve_neumann(k, std::vector<double>(m.num_vertices(), 0.0));
    for (double x : u) CHECK(x == 0.0);
  }
  SUBCASE("rhs = K w recovers w up to a constant") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    std::vector<double> w(m.num_vertices());
    for (auto& x : w) x = nd(rng);
    const auto b = k.matrix.multiply(w);
    SolveStats stats;
    const auto u = solve_neumann(k, b, {}, &stats);
    CHECK(stats.relative_residual <= 1e-13);
    const auto gw = remove_weighted_mean(w, k.support_mass);
    double err = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) err = std::max(err, std::abs(u[i] - gw[i]));
    CHECK(err <= 1e-9);
    CHECK(std::abs(weighted_mean(u, k.support_mass)) <= 1e-12);
  }
}

TEST_CASE("manufactured solution converges at order two") {
  const double e1 = manufactured_error(8, 32);
  const double e2 = manufactured_error(16, 64);
  CHECK(e1 / e2 >= 3.5);
  CHECK(e1 / e2 <= 4.5);
}

TEST_CASE("lumped masses and norms") {
  const TriMesh m = generate_disk_in_disk({1.0, 3.0, 32, 256});
  const auto torso = lumped_mass(m, MassSupport::Torso);
  const auto heart = lumped_mass(m, MassSupport::Heart);
  const auto all = lumped_mass(m, MassSupport::All);
  const auto outer = lumped_mass(m, MassSupport::OuterBoundary);

  std::vector<double> one(m.num_vertices(), 0.0);
  for (std::size_t i = 0; i < one.size(); ++i) one[i] = torso.diag[i] > 0.0 ? 1.0 : 0.0;
  // Annulus (1, 3) has area 8 pi; the polygonal deficit is O(h^2).
  CHECK(l2_norm(torso, one) == doctest::Approx(std::sqrt(8.0 * M_PI)).epsilon(1e-3));
  CHECK(heart.measure() + torso.measure() == doctest::Approx(all.measure()).epsilon(1e-14));
  CHECK(outer.measure() == doctest::Approx(6.0 * M_PI).epsilon(1e-4));

  CHECK(l2_norm(torso, std::vector<double>(m.num_vertices(), 0.0)) == 0.0);
  std::vector<double> scaled(one);
  for (auto& x : scaled) x *= -2.5;
  CHECK(l2_norm(torso, scaled) == doctest::Approx(2.5 * l2_norm(torso, one)).epsilon(1e-14));
  CHECK(l1_norm(outer, scaled) == doctest::Approx(2.5 * outer.measure()).epsilon(1e-14));

  SpaceTimeL1 acc(outer);
  acc.add(0.5, one);
  acc.add(0.5, one);
  CHECK(acc.value() == doctest::Approx(outer.measure()).epsilon(1e-14));
}

TEST_CASE("operator set uses the documented conductivities") {
  const TriMesh m = generate_disk_in_disk({1.0, 3.0, 6, 24});
  const ConductivityMap s{1.5, 2.5, 4.0};
  const OperatorSet ops = build_operators(m, s);
  const auto ref_e = assemble_stiffness(m, {2.5, 4.0});
  const auto ref_i = assemble_stiffness(m, {1.5, 0.0});
  // Compare by action on a fixed vector; sparsity patterns may differ.
  std::vector<double> x(m.num_vertices());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.37 * static_cast<double>(i));
  auto close = [&](const StiffnessOperator& a, const StiffnessOperator& b) {
    const auto ya = a.matrix.multiply(x);
    const auto yb = b.matrix.multiply(x);
    double d = 0.0;
    for (std::size_t i = 0; i < ya.size(); ++i) d = std::max(d, std::abs(ya[i] - yb[i]));
    return d;
  };
  CHECK(close(ops.intra, ref_i) <= 1e-12);
  CHECK(close(ops.source, ref_e) <= 1e-12);
  // The balance operator is sigma_i + sigma_e in the heart and sigma_t outside.
  const auto ref_b2 = assemble_stiffness(m, {s.sigma_i + s.sigma_e, s.sigma_t});
  CHECK(close(ops.balance, ref_b2) <= 1e-12);
}
