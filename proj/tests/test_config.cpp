#include <doctest.h>

#include <string>

#include "ecgfwd/config.hpp"
#include "ecgfwd/errors.hpp"

using namespace ecgfwd;

namespace {

std::string error_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& s, std::string_view part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("empty sections keep the defaults") {
  CHECK(parse_config("") == RunConfig{});
  CHECK(parse_config("[mesh]\n\n# nothing here\n[time]\n") == RunConfig{});
}

TEST_CASE("values are applied") {
  const auto c = parse_config(
      "[mesh]\nrings = 8 # inline comment\nsectors = 40\n"
      "[conductivity]\nsigma_t = 4.5\n"
      "[front]\nfront = ms0d\nepsilon = 1.25\n"
      "[solver]\nenforce_compat = false\n");
  CHECK(c.mesh.rings == 8);
  CHECK(c.mesh.sectors == 40);
  CHECK(c.conductivity.sigma_t == 4.5);
  CHECK(c.front.kind == FrontSpec::Kind::Ms0d);
  CHECK(c.front.epsilon == 1.25);
  CHECK(!c.enforce_compat);
  CHECK(make_solver_options(c).enforce_compat == false);
  CHECK(make_solver_options(c).tol == c.solver_tol);
}

TEST_CASE("constraint violations name the constraint and line") {
  const auto e = error_of("[front]\n\nepsilon = -1\n");
  CHECK(contains(e, "epsilon > 0"));
  CHECK(contains(e, "line 3"));
  CHECK(contains(error_of("[mesh]\nr_torso = 10\nr_heart = 12\n"), "r_torso > r_heart"));
  CHECK(contains(error_of("[ionic]\nv_gate = 1\n"), "0 < v_gate < 1"));
  CHECK(contains(error_of("[time]\ndt = 1\nT = 0.5\n"), "T >= dt"));
  CHECK(contains(error_of("[stimulus]\ncenter_x = 20\n"), "|center| < r_heart"));
}

TEST_CASE("malformed input") {
  CHECK(contains(error_of("[mesh]\nbogus = 1\n"), "unknown key"));
  CHECK(contains(error_of("[mesh]\nbogus = 1\n"), "line 2"));
  CHECK(contains(error_of("[nowhere]\n"), "unknown section"));
  CHECK(contains(error_of("[mesh]\nrings = 4\nrings = 5\n"), "duplicate key"));
  CHECK(contains(error_of("[mesh]\nrings = 4\nrings = 5\n"), "line 3"));
  CHECK(contains(error_of("[mesh]\nrings = four\n"), "expected an integer"));
  CHECK(contains(error_of("[time]\ndt = 0.1x\n"), "expected a number"));
  CHECK(contains(error_of("[time]\ndt =\n"), "missing value"));
  CHECK(contains(error_of("dt = 0.1\n"), "outside any section"));
  CHECK(contains(error_of("[time\n"), "malformed section header"));
  CHECK(contains(error_of("[time]\ndt\n"), "expected key = value"));
  CHECK(contains(error_of("[front]\nfront = square\n"), "heaviside or ms0d"));
  CHECK(contains(error_of("[solver]\nenforce_compat = maybe\n"), "true or false"));
}

TEST_CASE("format and parse round-trip") {
  RunConfig c;
  c.mesh_file = "meshes/a.txt";
  c.conductivity.sigma_i = 0.1 + 0.2;
  c.dt = 1.0 / 30.0;
  c.stimulus.center = {1.0 / 3.0, -2.0};
  c.front = {FrontSpec::Kind::Ms0d, 0.7};
  c.bidomain_tol = 3e-16;
  c.max_iter_factor = 7;
  c.enforce_compat = false;
  CHECK(parse_config(format_config(c)) == c);
  CHECK(parse_config(format_config(RunConfig{})) == RunConfig{});
}

TEST_CASE("validate") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  c.solver_tol = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("fronts and meshes from a config") {
  RunConfig c;
  c.mesh = {1.0, 2.0, 4, 16};
  c.front = {FrontSpec::Kind::Heaviside, 2.0};
  CHECK(std::holds_alternative<SmoothedHeaviside>(make_front(c)));
  c.front.kind = FrontSpec::Kind::Ms0d;
  CHECK(std::holds_alternative<Ms0dFront>(make_front(c)));
  const auto mesh = make_mesh(c);
  CHECK(mesh->num_vertices() > 0);
  c.mesh_file = "does_not_exist.txt";
  CHECK_THROWS(make_mesh(c, "/nonexistent"));
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}
