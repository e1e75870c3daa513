#include <doctest.h>

#include <cmath>
#include <string>

#include "ecgfwd/errors.hpp"
#include "ecgfwd/mesh.hpp"

using namespace ecgfwd;

namespace {

double max_diameter(const TriMesh& m) {
  double d = 0.0;
  const auto v = m.vertices();
  for (const auto& t : m.triangles()) {
    for (int k = 0; k < 3; ++k) {
      const Vec2 a = v[t.v[k]];
      const Vec2 b = v[t.v[(k + 1) % 3]];
      d = std::max(d, std::hypot(a.x - b.x, a.y - b.y));
    }
  }
  return d;
}

// Two triangles: heart (0,1,2) and torso (1,3,2).
const char* kTwoTriangles =
    "4 2 2\n"
    "0 0\n1 0\n0 1\n1 1\n"
    "0 1 2 1\n"
    "1 3 2 2\n"
    "1 3 1\n"
    "3 2 1\n";

}  // namespace

TEST_CASE("heart triangles are exactly those with centroid inside r_heart") {
  const TriMesh m = generate_disk_in_disk({1.0, 3.0, 8, 32});
  std::size_t heart = 0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const Vec2 c = m.centroid(t);
    const bool inside = std::hypot(c.x, c.y) < 1.0;
    CHECK((m.triangles()[t].region == Region::Heart) == inside);
    heart += inside;
  }
  CHECK(heart > 0);
  CHECK(heart < m.num_triangles());
  // Every outer vertex sits on the torso circle; the interface closes a loop.
  for (auto i : m.outer_vertices()) {
    const Vec2 p = m.vertices()[i];
    CHECK(std::hypot(p.x, p.y) == doctest::Approx(3.0).epsilon(1e-12));
  }
  CHECK(m.interface_edges().size() == 32);
  CHECK(m.boundary_edges().size() == 32);
}

TEST_CASE("total area converges to the annulus and disk areas") {
  for (int rings : {8, 16, 32}) {
    const TriMesh m = generate_disk_in_disk({1.0, 3.0, rings, 4 * rings});
    double heart = 0.0, all = 0.0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
      all += m.signed_area(t);
      if (m.triangles()[t].region == Region::Heart) heart += m.signed_area(t);
    }
    // Inscribed polygons: relative deficit 1 - sin(2 pi / n) / (2 pi / n) ~ (2 pi / n)^2 / 6.
    const double n = 4.0 * rings;
    const double deficit = 1.0 - std::sin(2.0 * M_PI / n) / (2.0 * M_PI / n);
    CHECK(all == doctest::Approx(9.0 * M_PI * (1.0 - deficit)).epsilon(1e-12));
    CHECK(heart == doctest::Approx(M_PI * (1.0 - deficit)).epsilon(1e-12));
  }
}

TEST_CASE("doubling the resolution halves the largest triangle diameter") {
  const double h1 = max_diameter(generate_disk_in_disk({1.0, 3.0, 8, 32}));
  const double h2 = max_diameter(generate_disk_in_disk({1.0, 3.0, 16, 64}));
  CHECK(h2 / h1 >= 0.45);
  CHECK(h2 / h1 <= 0.55);
}

TEST_CASE("doubling rings alone halves the radial spacing") {
  // With the sector count fixed the tangential edges do not shrink, so the
  // radial edge length is what halves.
  auto radial = [](const TriMesh& m) {
    double r_min = INFINITY;
    for (const auto& p : m.vertices()) {
      const double r = std::hypot(p.x, p.y);
      if (r > 1.0 + 1e-9) r_min = std::min(r_min, r);
    }
    return r_min - 1.0;
  };
  const double a = radial(generate_disk_in_disk({1.0, 3.0, 8, 32}));
  const double b = radial(generate_disk_in_disk({1.0, 3.0, 16, 32}));
  CHECK(b / a == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("invalid generator parameters are rejected") {
  CHECK_THROWS_AS(generate_disk_in_disk({3.0, 1.0, 8, 32}), InvalidArgument);
  CHECK_THROWS_AS(generate_disk_in_disk({1.0, 3.0, 1, 32}), InvalidArgument);
  CHECK_THROWS_AS(generate_disk_in_disk({1.0, 3.0, 8, 4}), InvalidArgument);
}

TEST_CASE("mesh text round-trips exactly") {
  const TriMesh m = generate_disk_in_disk({1.0, 3.0, 8, 32});
  const TriMesh back = parse_mesh(format_mesh(m));
  CHECK(back == m);
  CHECK(format_mesh(back) == format_mesh(m));
  const TriMesh small = parse_mesh(kTwoTriangles);
  CHECK(small.num_vertices() == 4);
  CHECK(small.heart_vertices().size() == 3);
  CHECK(small.interface_edges().size() == 1);
}

TEST_CASE("malformed mesh files name the offending line") {
  std::string bad = kTwoTriangles;
  bad.replace(bad.find("1 3 2 2"), 7, "1 4 2 2");
  try {
    parse_mesh(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 7);
    CHECK(std::string(e.what()).find("out of range") != std::string::npos);
  }

  bad = kTwoTriangles;
  bad.replace(bad.find("1 3 2 2"), 7, "1 3 2 3");
  try {
    parse_mesh(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 7);
    CHECK(std::string(e.what()).find("unknown region tag") != std::string::npos);
  }

  CHECK_THROWS_AS(parse_mesh("4 2 2\n0 0\n1 0\n"), ParseError);
}

TEST_CASE("clockwise triangles are rejected") {
  std::string bad = kTwoTriangles;
  bad.replace(bad.find("0 1 2 1"), 7, "0 2 1 1");
  CHECK_THROWS_AS(parse_mesh(bad), InvalidArgument);
}
