#include "ecgfwd/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "ecgfwd/errors.hpp"

namespace ecgfwd {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Where {
  std::string section;
  std::string key;
  std::size_t line;
};

[[noreturn]] void fail(const Where& w, std::string_view msg) {
  throw ConfigError(fmt::format("[{}] {} (line {}): {}", w.section, w.key, w.line, msg));
}

double to_double(std::string_view v, const Where& w) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size()) fail(w, fmt::format("expected a number, got '{}'", v));
  return x;
}

int to_int(std::string_view v, const Where& w) {
  int x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size()) fail(w, fmt::format("expected an integer, got '{}'", v));
  return x;
}

bool to_bool(std::string_view v, const Where& w) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(w, fmt::format("expected true or false, got '{}'", v));
}

using Setter = std::function<void(RunConfig&, std::string_view, const Where&)>;

Setter real(double RunConfig::*m) {
  return [m](RunConfig& c, std::string_view v, const Where& w) { c.*m = to_double(v, w); };
}

template <typename Sub>
Setter real(Sub RunConfig::*outer, double Sub::*inner) {
  return [outer, inner](RunConfig& c, std::string_view v, const Where& w) { (c.*outer).*inner = to_double(v, w); };
}

template <typename Sub>
Setter integer(Sub RunConfig::*outer, int Sub::*inner) {
  return [outer, inner](RunConfig& c, std::string_view v, const Where& w) { (c.*outer).*inner = to_int(v, w); };
}

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = {
      {"mesh",
       {{"file", [](RunConfig& c, std::string_view v, const Where&) { c.mesh_file = std::string(v); }},
        {"r_heart", real(&RunConfig::mesh, &DiskMeshParams::r_heart)},
        {"r_torso", real(&RunConfig::mesh, &DiskMeshParams::r_torso)},
        {"rings", integer(&RunConfig::mesh, &DiskMeshParams::rings)},
        {"sectors", integer(&RunConfig::mesh, &DiskMeshParams::sectors)}}},
      {"conductivity",
       {{"sigma_i", real(&RunConfig::conductivity, &ConductivityMap::sigma_i)},
        {"sigma_e", real(&RunConfig::conductivity, &ConductivityMap::sigma_e)},
        {"sigma_t", real(&RunConfig::conductivity, &ConductivityMap::sigma_t)}}},
      {"ionic",
       {{"tau_in", real(&RunConfig::ionic, &MSParams::tau_in)},
        {"tau_out", real(&RunConfig::ionic, &MSParams::tau_out)},
        {"tau_open", real(&RunConfig::ionic, &MSParams::tau_open)},
        {"tau_close", real(&RunConfig::ionic, &MSParams::tau_close)},
        {"v_gate", real(&RunConfig::ionic, &MSParams::v_gate)}}},
      {"time", {{"dt", real(&RunConfig::dt)}, {"T", real(&RunConfig::T)}}},
      {"stimulus",
       {{"center_x", [](RunConfig& c, std::string_view v, const Where& w) { c.stimulus.center.x = to_double(v, w); }},
        {"center_y", [](RunConfig& c, std::string_view v, const Where& w) { c.stimulus.center.y = to_double(v, w); }},
        {"radius", [](RunConfig& c, std::string_view v, const Where& w) { c.stimulus.radius = to_double(v, w); }},
        {"amplitude",
         [](RunConfig& c, std::string_view v, const Where& w) { c.stimulus.pulse.amplitude = to_double(v, w); }},
        {"t0", [](RunConfig& c, std::string_view v, const Where& w) { c.stimulus.pulse.t0 = to_double(v, w); }},
        {"half_width",
         [](RunConfig& c, std::string_view v, const Where& w) { c.stimulus.pulse.half_width = to_double(v, w); }}}},
      {"front",
       {{"front",
         [](RunConfig& c, std::string_view v, const Where& w) {
           if (v == "heaviside") c.front.kind = FrontSpec::Kind::Heaviside;
           else if (v == "ms0d") c.front.kind = FrontSpec::Kind::Ms0d;
           else fail(w, fmt::format("expected heaviside or ms0d, got '{}'", v));
         }},
        {"epsilon", real(&RunConfig::front, &FrontSpec::epsilon)}}},
      {"solver",
       {{"tol", real(&RunConfig::solver_tol)},
        {"bidomain_tol", real(&RunConfig::bidomain_tol)},
        {"max_iter_factor",
         [](RunConfig& c, std::string_view v, const Where& w) { c.max_iter_factor = to_int(v, w); }},
        {"enforce_compat",
         [](RunConfig& c, std::string_view v, const Where& w) { c.enforce_compat = to_bool(v, w); }}}},
  };
  return s;
}

struct Violation {
  std::string section;
  std::string key;
  std::string constraint;
};

std::optional<Violation> first_violation(const RunConfig& c) {
  struct Check {
    const char* section;
    const char* key;
    bool ok;
    const char* constraint;
  };
  const Check checks[] = {
      {"mesh", "r_heart", c.mesh.r_heart > 0.0, "r_heart > 0"},
      {"mesh", "r_torso", c.mesh.r_torso > c.mesh.r_heart, "r_torso > r_heart"},
      {"mesh", "rings", c.mesh.rings >= 2, "rings >= 2"},
      {"mesh", "sectors", c.mesh.sectors >= 8, "sectors >= 8"},
      {"conductivity", "sigma_i", c.conductivity.sigma_i >= 0.0, "sigma_i >= 0"},
      {"conductivity", "sigma_e", c.conductivity.sigma_e > 0.0, "sigma_e > 0"},
      {"conductivity", "sigma_t", c.conductivity.sigma_t > 0.0, "sigma_t > 0"},
      {"ionic", "tau_in", c.ionic.tau_in > 0.0, "tau_in > 0"},
      {"ionic", "tau_out", c.ionic.tau_out > 0.0, "tau_out > 0"},
      {"ionic", "tau_open", c.ionic.tau_open > 0.0, "tau_open > 0"},
      {"ionic", "tau_close", c.ionic.tau_close > 0.0, "tau_close > 0"},
      {"ionic", "v_gate", c.ionic.v_gate > 0.0 && c.ionic.v_gate < 1.0, "0 < v_gate < 1"},
      {"time", "dt", c.dt > 0.0, "dt > 0"},
      {"time", "T", c.T >= c.dt, "T >= dt"},
      {"stimulus", "radius", c.stimulus.radius > 0.0, "radius > 0"},
      {"stimulus", "amplitude", c.stimulus.pulse.amplitude >= 0.0, "amplitude >= 0"},
      {"stimulus", "half_width", c.stimulus.pulse.half_width > 0.0, "half_width > 0"},
      {"stimulus", "center_x",
       !c.mesh_file.empty() || std::hypot(c.stimulus.center.x, c.stimulus.center.y) < c.mesh.r_heart,
       "|center| < r_heart"},
      {"front", "epsilon", c.front.epsilon > 0.0, "epsilon > 0"},
      {"solver", "tol", c.solver_tol > 0.0 && c.solver_tol < 1.0, "0 < tol < 1"},
      {"solver", "bidomain_tol", c.bidomain_tol > 0.0 && c.bidomain_tol < 1.0, "0 < bidomain_tol < 1"},
      {"solver", "max_iter_factor", c.max_iter_factor >= 1, "max_iter_factor >= 1"},
  };
  for (const auto& ch : checks) {
    if (!ch.ok) return Violation{ch.section, ch.key, ch.constraint};
  }
  return std::nullopt;
}

}  // namespace

void RunConfig::validate() const {
  if (const auto v = first_violation(*this)) {
    throw ConfigError(fmt::format("[{}] {}: constraint {} violated", v->section, v->key, v->constraint));
  }
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  const auto& sch = schema();
  std::string section;
  std::map<std::pair<std::string, std::string>, std::size_t> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(fmt::format("line {}: malformed section header", line_no));
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!sch.contains(section)) throw ConfigError(fmt::format("line {}: unknown section [{}]", line_no, section));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("line {}: expected key = value", line_no));
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(fmt::format("line {}: key '{}' outside any section", line_no, key));
    const Where where{section, key, line_no};
    const auto& keys = sch.at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) fail(where, "unknown key");
    if (!seen.emplace(std::pair(section, key), line_no).second) fail(where, "duplicate key");
    if (value.empty() && key != "file") fail(where, "missing value");
    it->second(cfg, value, where);
  }
  if (const auto v = first_violation(cfg)) {
    const auto it = seen.find({v->section, v->key});
    const std::string line = it == seen.end() ? std::string("default value") : fmt::format("line {}", it->second);
    throw ConfigError(fmt::format("[{}] {} ({}): constraint {} violated", v->section, v->key, line, v->constraint));
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const RunConfig& c) {
  std::string out;
  auto kv = [&](std::string_view k, double v) { out += fmt::format("{} = {:.17g}\n", k, v); };
  auto ki = [&](std::string_view k, long v) { out += fmt::format("{} = {}\n", k, v); };
  out += "[mesh]\n";
  out += fmt::format("file = {}\n", c.mesh_file);
  kv("r_heart", c.mesh.r_heart);
  kv("r_torso", c.mesh.r_torso);
  ki("rings", c.mesh.rings);
  ki("sectors", c.mesh.sectors);
  out += "\n[conductivity]\n";
  kv("sigma_i", c.conductivity.sigma_i);
  kv("sigma_e", c.conductivity.sigma_e);
  kv("sigma_t", c.conductivity.sigma_t);
  out += "\n[ionic]\n";
  kv("tau_in", c.ionic.tau_in);
  kv("tau_out", c.ionic.tau_out);
  kv("tau_open", c.ionic.tau_open);
  kv("tau_close", c.ionic.tau_close);
  kv("v_gate", c.ionic.v_gate);
  out += "\n[time]\n";
  kv("dt", c.dt);
  kv("T", c.T);
  out += "\n[stimulus]\n";
  kv("center_x", c.stimulus.center.x);
  kv("center_y", c.stimulus.center.y);
  kv("radius", c.stimulus.radius);
  kv("amplitude", c.stimulus.pulse.amplitude);
  kv("t0", c.stimulus.pulse.t0);
  kv("half_width", c.stimulus.pulse.half_width);
  out += "\n[front]\n";
  out += fmt::format("front = {}\n", c.front.kind == FrontSpec::Kind::Heaviside ? "heaviside" : "ms0d");
  kv("epsilon", c.front.epsilon);
  out += "\n[solver]\n";
  kv("tol", c.solver_tol);
  kv("bidomain_tol", c.bidomain_tol);
  ki("max_iter_factor", c.max_iter_factor);
  out += fmt::format("enforce_compat = {}\n", c.enforce_compat ? "true" : "false");
  return out;
}

std::shared_ptr<const TriMesh> make_mesh(const RunConfig& config, const std::filesystem::path& base) {
  if (config.mesh_file.empty()) return std::make_shared<const TriMesh>(generate_disk_in_disk(config.mesh));
  std::filesystem::path p(config.mesh_file);
  if (p.is_relative() && !base.empty()) p = base / p;
  return std::make_shared<const TriMesh>(load_mesh(p));
}

BidomainConfig make_bidomain_config(const RunConfig& c, std::shared_ptr<const TriMesh> mesh) {
  BidomainConfig b;
  b.mesh = std::move(mesh);
  b.conductivity = c.conductivity;
  b.ionic = c.ionic;
  b.dt = c.dt;
  b.T = c.T;
  b.stimulus = c.stimulus;
  b.solver_tol = c.bidomain_tol;
  b.max_iter_factor = c.max_iter_factor;
  return b;
}

NeumannOptions make_solver_options(const RunConfig& c) {
  NeumannOptions o;
  o.tol = c.solver_tol;
  o.max_iter_factor = c.max_iter_factor;
  o.enforce_compat = c.enforce_compat;
  return o;
}

FrontShape make_front(const RunConfig& c) {
  if (c.front.kind == FrontSpec::Kind::Ms0d) return make_ms0d_front(c.ionic);
  return SmoothedHeaviside{c.front.epsilon};
}

}  // namespace ecgfwd
