#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "ecgfwd/config.hpp"
#include "ecgfwd/experiments.hpp"
#include "ecgfwd/fields_io.hpp"
#include "ecgfwd/mesh.hpp"
#include "fixtures.hpp"

using namespace ecgfwd;

namespace {

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = run_cli(args, out, err);
  return {status, out.str(), err.str()};
}

std::string write_small_config(const testing::TempDir& dir) {
  RunConfig c;
  c.mesh = {4.0, 8.0, 6, 24};
  c.stimulus.center = {2.0, 0.0};
  c.T = 12.0;
  const auto p = (dir / "small.ini").string();
  std::ofstream(p) << format_config(c);
  return p;
}

}  // namespace

TEST_CASE("usage errors") {
  const auto none = cli({});
  CHECK(none.status != 0);
  CHECK(none.err.find("mesh-gen") != std::string::npos);
  const auto bogus = cli({"frobnicate"});
  CHECK(bogus.status != 0);
  CHECK(bogus.err.find("Usage") != std::string::npos);
  CHECK(cli({"mesh-gen"}).status != 0);  // --out is required
  CHECK(cli({"--help"}).status == 0);
  const auto missing = cli({"--config", "/nonexistent.ini", "verify", "--out", "/tmp/never.csv"});
  CHECK(missing.status != 0);
  CHECK(missing.err.find("cannot open config") != std::string::npos);
}

TEST_CASE("mesh-gen writes a loadable mesh and refuses to overwrite") {
  testing::TempDir dir("cli_mesh");
  const auto p = (dir / "m.txt").string();
  const auto r = cli({"mesh-gen", "--r-heart", "1", "--r-torso", "2", "--rings", "4", "--sectors", "16", "--out", p});
  REQUIRE(r.status == 0);
  const TriMesh mesh = load_mesh(p);
  CHECK(mesh.num_vertices() == generate_disk_in_disk({1.0, 2.0, 4, 16}).num_vertices());
  const std::string before = read_text(p);
  const auto again = cli({"mesh-gen", "--rings", "6", "--out", p});
  CHECK(again.status != 0);
  CHECK(again.err.find("exists") != std::string::npos);
  CHECK(read_text(p) == before);
  CHECK(cli({"--force", "mesh-gen", "--r-heart", "1", "--r-torso", "2", "--rings", "6", "--out", p}).status == 0);
  CHECK(read_text(p) != before);
}

TEST_CASE("ms0d trace") {
  testing::TempDir dir("cli_ms0d");
  const auto p = (dir / "trace.csv").string();
  REQUIRE(cli({"ms0d", "--dt", "0.05", "--out", p}).status == 0);
  CHECK(read_text(p).rfind("t,v,h\n", 0) == 0);
  CHECK(cli({"ms0d", "--T", "100", "--out", (dir / "short.csv").string()}).status != 0);
}

TEST_CASE("pipeline on a small configuration") {
  testing::TempDir dir("cli_run");
  const auto cfg = write_small_config(dir);
  const auto run_dir = (dir / "run").string();
  CHECK(cli({"run-bidomain", "--out-dir", run_dir}).status != 0);  // needs --config
  const auto r = cli({"--config", cfg, "run-bidomain", "--out-dir", run_dir});
  REQUIRE(r.status == 0);
  CHECK(r.out.find("[mesh]") != std::string::npos);
  CHECK(cli({"--config", cfg, "run-bidomain", "--out-dir", run_dir}).status != 0);

  const auto act = (dir / "act.csv").string();
  REQUIRE(cli({"activation", "--v", run_dir + "/fields_v.csv", "--out", act}).status == 0);
  CHECK(read_text(act).rfind("vertex_id,psi\n", 0) == 0);

  const auto v1 = (dir / "verify1.csv").string();
  const auto v3 = (dir / "verify3.csv").string();
  REQUIRE(cli({"--run-dir", run_dir, "verify", "--out", v1}).status == 0);
  REQUIRE(cli({"--run-dir", run_dir, "--threads", "3", "verify", "--out", v3}).status == 0);
  const auto text = read_text(v1);
  CHECK(text == read_text(v3));
  const auto rep = ExperimentReport::parse_csv(text);
  CHECK(rep.rows.size() >= 6);
  CHECK(rep.select("verify", "F2", "max_rel_l2_torso").size() == 1);

  // A run regenerated from the config gives the same report.
  const auto vc = (dir / "verify_cfg.csv").string();
  REQUIRE(cli({"--config", cfg, "verify", "--out", vc}).status == 0);
  CHECK(read_text(vc) == text);

  const auto f2 = (dir / "f2.csv").string();
  REQUIRE(cli({"--run-dir", run_dir, "solve-f2", "--front", "vref", "--out", f2}).status == 0);
  const auto table = read_field_csv(f2);
  CHECK(table.times.size() == read_field_csv(run_dir + "/fields_u.csv").times.size());
  CHECK(cli({"--run-dir", run_dir, "solve-f2", "--front", "square", "--out", (dir / "x.csv").string()}).status != 0);

  const auto f1 = (dir / "f1.csv").string();
  REQUIRE(cli({"--run-dir", run_dir, "solve-f1", "--recipe", "sbdf2+f_ms_with_h", "--out", f1}).status == 0);
  CHECK(cli({"--run-dir", run_dir, "solve-f1", "--recipe", "nope", "--out", (dir / "y.csv").string()}).status != 0);
}
