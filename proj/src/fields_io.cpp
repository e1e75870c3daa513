#include "ecgfwd/fields_io.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <sstream>

#include "ecgfwd/errors.hpp"

namespace ecgfwd {

std::string format_field_csv(const FieldTable& t) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "t");
  for (auto id : t.ids) fmt::format_to(std::back_inserter(buf), ",{}", id);
  buf.push_back('\n');
  for (std::size_t n = 0; n < t.rows.size(); ++n) {
    fmt::format_to(std::back_inserter(buf), "{:.17g}", t.times[n]);
    for (double x : t.rows[n]) fmt::format_to(std::back_inserter(buf), ",{:.17g}", x);
    buf.push_back('\n');
  }
  return fmt::to_string(buf);
}

namespace {

template <typename T>
T parse_number(std::string_view s, std::size_t line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ParseError(fmt::format("bad value '{}'", s), line);
  return v;
}

template <typename Fn>
void for_each_field(std::string_view line, Fn&& fn) {
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    fn(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return;
    start = pos + 1;
  }
}

}  // namespace

FieldTable parse_field_csv(const std::string& text) {
  FieldTable t;
  std::string_view rest(text);
  std::size_t line_no = 0;
  bool header = true;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      bool first = true;
      for_each_field(line, [&](std::string_view f) {
        if (first) {
          if (f != "t") throw ParseError("field CSV header must start with 't'", line_no);
          first = false;
          return;
        }
        t.ids.push_back(parse_number<std::int32_t>(f, line_no));
      });
      header = false;
      continue;
    }
    std::vector<double> row;
    row.reserve(t.ids.size());
    bool first = true;
    for_each_field(line, [&](std::string_view f) {
      const double v = parse_number<double>(f, line_no);
      if (first) {
        t.times.push_back(v);
        first = false;
      } else {
        row.push_back(v);
      }
    });
    if (row.size() != t.ids.size()) {
      throw ParseError(fmt::format("expected {} values, got {}", t.ids.size(), row.size()), line_no);
    }
    t.rows.push_back(std::move(row));
  }
  if (header) throw ParseError("empty field CSV", 0);
  return t;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FieldTable read_field_csv(const std::filesystem::path& path) {
  try {
    return parse_field_csv(read_text(path));
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()), 0);
  }
}

FieldTable make_field_table(std::span<const double> times, const std::vector<std::vector<double>>& fields,
                            std::span<const std::int32_t> ids) {
  if (times.size() != fields.size()) throw InvalidArgument("field table: times and fields differ in length");
  FieldTable t;
  t.ids.assign(ids.begin(), ids.end());
  t.times.assign(times.begin(), times.end());
  t.rows.reserve(fields.size());
  for (const auto& f : fields) {
    std::vector<double> row(ids.size());
    for (std::size_t j = 0; j < ids.size(); ++j) row[j] = f.at(static_cast<std::size_t>(ids[j]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<std::vector<double>> expand_field_table(const FieldTable& t, std::size_t num_vertices) {
  for (auto id : t.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= num_vertices) {
      throw InvalidArgument(fmt::format("field column {} outside the mesh ({} vertices)", id, num_vertices));
    }
  }
  std::vector<std::vector<double>> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    std::vector<double> f(num_vertices, 0.0);
    for (std::size_t j = 0; j < t.ids.size(); ++j) f[static_cast<std::size_t>(t.ids[j])] = row[j];
    out.push_back(std::move(f));
  }
  return out;
}

void ensure_writable(const std::filesystem::path& path, bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw Error(fmt::format("'{}' already exists (use --force to overwrite)", path.string()));
  }
}

void write_output(const std::filesystem::path& path, const std::string& text, bool force) {
  ensure_writable(path, force);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
}

void ensure_run_writable(const std::filesystem::path& dir, bool force) {
  for (const char* f : {RunFiles::kMesh, RunFiles::kMeta, RunFiles::kV, RunFiles::kU, RunFiles::kH, RunFiles::kRhs,
                        RunFiles::kReaction}) {
    ensure_writable(dir / f, force);
  }
}

void save_run(const BidomainRun& run, const RunConfig& config, const std::filesystem::path& dir, bool force) {
  const TriMesh& mesh = *run.mesh;
  ensure_run_writable(dir, force);
  RunConfig meta = config;
  meta.mesh_file = RunFiles::kMesh;
  std::vector<std::int32_t> all(mesh.num_vertices());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::int32_t>(i);
  const auto heart = mesh.heart_vertices();

  write_output(dir / RunFiles::kMesh, format_mesh(mesh), force);
  write_output(dir / RunFiles::kMeta, format_config(meta), force);
  write_output(dir / RunFiles::kV, format_field_csv(make_field_table(run.times, run.v, heart)), force);
  write_output(dir / RunFiles::kU, format_field_csv(make_field_table(run.times, run.u, all)), force);
  write_output(dir / RunFiles::kH, format_field_csv(make_field_table(run.times, run.h, heart)), force);
  write_output(dir / RunFiles::kRhs, format_field_csv(make_field_table(run.times, run.recorded_rhs, heart)),
               force);
  write_output(dir / RunFiles::kReaction,
               format_field_csv(make_field_table(run.times, run.recorded_reaction, heart)), force);
}

LoadedRun load_run(const std::filesystem::path& dir) {
  LoadedRun out;
  out.config = load_config(dir / RunFiles::kMeta);
  out.mesh = make_mesh(out.config, dir);
  const std::size_t nv = out.mesh->num_vertices();
  BidomainRun& run = out.run;
  run.mesh = out.mesh;
  run.config = make_bidomain_config(out.config, out.mesh);

  const FieldTable v = read_field_csv(dir / RunFiles::kV);
  run.times = v.times;
  run.v = expand_field_table(v, nv);
  auto load = [&](const char* name) {
    const FieldTable t = read_field_csv(dir / name);
    if (t.times != run.times) throw Error(fmt::format("{}: time column differs from {}", name, RunFiles::kV));
    return expand_field_table(t, nv);
  };
  run.u = load(RunFiles::kU);
  run.h = load(RunFiles::kH);
  run.recorded_rhs = load(RunFiles::kRhs);
  run.recorded_reaction = load(RunFiles::kReaction);
  run.iterations.assign(run.times.size(), 0);
  return out;
}

std::string format_activation_csv(const TriMesh& mesh, const ActivationMap& act) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "vertex_id,psi\n");
  for (std::int32_t g : mesh.heart_vertices()) {
    const double p = act.psi[static_cast<std::size_t>(g)];
    if (ActivationMap::activated(p)) fmt::format_to(std::back_inserter(buf), "{},{:.17g}\n", g, p);
    else fmt::format_to(std::back_inserter(buf), "{},inf\n", g);
  }
  return fmt::to_string(buf);
}

}  // namespace ecgfwd
