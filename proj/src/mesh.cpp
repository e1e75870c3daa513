#include "ecgfwd/mesh.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "ecgfwd/errors.hpp"

namespace ecgfwd {
namespace {

std::uint64_t edge_key(std::int32_t a, std::int32_t b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

struct EdgeUse {
  std::int32_t tri0 = -1;
  std::int32_t tri1 = -1;
  int count = 0;
};

bool region_connected(const std::vector<Triangle>& tris,
                      const std::unordered_map<std::uint64_t, EdgeUse>& edges, Region region) {
  std::vector<std::vector<std::int32_t>> adj(tris.size());
  for (const auto& [key, use] : edges) {
    if (use.count != 2) continue;
    if (tris[use.tri0].region == region && tris[use.tri1].region == region) {
      adj[use.tri0].push_back(use.tri1);
      adj[use.tri1].push_back(use.tri0);
    }
  }
  std::int32_t start = -1;
  std::size_t total = 0;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    if (tris[t].region != region) continue;
    ++total;
    if (start < 0) start = static_cast<std::int32_t>(t);
  }
  if (total == 0) return true;
  std::vector<char> seen(tris.size(), 0);
  std::vector<std::int32_t> stack{start};
  seen[start] = 1;
  std::size_t reached = 0;
  while (!stack.empty()) {
    const std::int32_t t = stack.back();
    stack.pop_back();
    ++reached;
    for (std::int32_t n : adj[t]) {
      if (!seen[n]) {
        seen[n] = 1;
        stack.push_back(n);
      }
    }
  }
  return reached == total;
}

}  // namespace

TriMesh::TriMesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
                 std::vector<BoundaryEdge> boundary_edges)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_edges_(std::move(boundary_edges)) {
  validate_and_derive();
}

double TriMesh::signed_area(std::size_t tri) const {
  const auto& t = triangles_[tri];
  const Vec2 a = vertices_[t.v[0]];
  const Vec2 b = vertices_[t.v[1]];
  const Vec2 c = vertices_[t.v[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Vec2 TriMesh::centroid(std::size_t tri) const {
  const auto& t = triangles_[tri];
  const Vec2 a = vertices_[t.v[0]];
  const Vec2 b = vertices_[t.v[1]];
  const Vec2 c = vertices_[t.v[2]];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

double TriMesh::max_edge_length() const {
  double h = 0.0;
  for (const auto& t : triangles_) {
    for (int k = 0; k < 3; ++k) {
      const Vec2 a = vertices_[t.v[k]];
      const Vec2 b = vertices_[t.v[(k + 1) % 3]];
      h = std::max(h, std::hypot(b.x - a.x, b.y - a.y));
    }
  }
  return h;
}

void TriMesh::validate_and_derive() {
  const auto nv = static_cast<std::int32_t>(vertices_.size());
  auto check_index = [nv](std::int32_t i, const char* what, std::size_t item) {
    if (i < 0 || i >= nv) {
      throw InvalidArgument(fmt::format("{} {} references vertex {} (have {})", what, item, i, nv));
    }
  };

  std::unordered_map<std::uint64_t, EdgeUse> edges;
  edges.reserve(triangles_.size() * 2);
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (std::int32_t i : tri.v) check_index(i, "triangle", t);
    if (tri.region != Region::Heart && tri.region != Region::Torso) {
      throw InvalidArgument(fmt::format("triangle {} has an unknown region tag", t));
    }
    if (!(signed_area(t) > 0.0)) {
      throw InvalidArgument(fmt::format("triangle {} is not counterclockwise with positive area", t));
    }
    for (int k = 0; k < 3; ++k) {
      auto& use = edges[edge_key(tri.v[k], tri.v[(k + 1) % 3])];
      if (use.count == 0) use.tri0 = static_cast<std::int32_t>(t);
      else use.tri1 = static_cast<std::int32_t>(t);
      if (++use.count > 2) {
        throw InvalidArgument(fmt::format("edge of triangle {} is shared by more than two triangles", t));
      }
    }
  }

  for (std::size_t e = 0; e < boundary_edges_.size(); ++e) {
    const auto& be = boundary_edges_[e];
    for (std::int32_t i : be.v) check_index(i, "boundary edge", e);
    if (be.tag != BoundaryTag::TorsoOuter) {
      throw InvalidArgument(fmt::format("boundary edge {} has an unknown tag", e));
    }
    const auto it = edges.find(edge_key(be.v[0], be.v[1]));
    if (it == edges.end() || it->second.count != 1) {
      throw InvalidArgument(fmt::format("boundary edge {} does not belong to exactly one triangle", e));
    }
  }

  if (!region_connected(triangles_, edges, Region::Heart)) {
    throw InvalidArgument("HEART triangles are not edge-connected");
  }
  if (!region_connected(triangles_, edges, Region::Torso)) {
    throw InvalidArgument("TORSO triangles are not edge-connected");
  }

  interface_edges_.clear();
  for (const auto& [key, use] : edges) {
    if (use.count == 2 && triangles_[use.tri0].region != triangles_[use.tri1].region) {
      interface_edges_.push_back({{static_cast<std::int32_t>(key >> 32),
                                   static_cast<std::int32_t>(key & 0xffffffffu)}});
    }
  }
  std::sort(interface_edges_.begin(), interface_edges_.end(),
            [](const Edge& a, const Edge& b) { return a.v < b.v; });

  heart_index_.assign(vertices_.size(), -1);
  std::vector<char> in_heart(vertices_.size(), 0);
  for (const auto& tri : triangles_) {
    if (tri.region == Region::Heart) {
      for (std::int32_t i : tri.v) in_heart[i] = 1;
    }
  }
  heart_vertices_.clear();
  for (std::int32_t i = 0; i < nv; ++i) {
    if (in_heart[i]) {
      heart_index_[i] = static_cast<std::int32_t>(heart_vertices_.size());
      heart_vertices_.push_back(i);
    }
  }

  std::vector<char> on_outer(vertices_.size(), 0);
  for (const auto& be : boundary_edges_) {
    on_outer[be.v[0]] = 1;
    on_outer[be.v[1]] = 1;
  }
  outer_vertices_.clear();
  for (std::int32_t i = 0; i < nv; ++i) {
    if (on_outer[i]) outer_vertices_.push_back(i);
  }
}

TriMesh generate_disk_in_disk(const DiskMeshParams& p) {
  if (!(p.r_heart > 0.0) || !(p.r_heart < p.r_torso)) {
    throw InvalidArgument(fmt::format("need 0 < r_heart < r_torso (got {}, {})", p.r_heart, p.r_torso));
  }
  if (p.rings < 2) throw InvalidArgument(fmt::format("rings must be >= 2 (got {})", p.rings));
  if (p.sectors < 8) throw InvalidArgument(fmt::format("sectors must be >= 8 (got {})", p.sectors));

  const int rings = p.rings;
  int heart_rings =
      static_cast<int>(std::lround(static_cast<double>(rings) * p.r_heart / p.r_torso));
  heart_rings = std::clamp(heart_rings, 1, rings - 1);
  const int torso_rings = rings - heart_rings;

  std::vector<double> radius(rings + 1, 0.0);
  for (int k = 1; k <= heart_rings; ++k) radius[k] = p.r_heart * k / heart_rings;
  for (int k = 1; k <= torso_rings; ++k) {
    radius[heart_rings + k] = p.r_heart + (p.r_torso - p.r_heart) * k / torso_rings;
  }
  radius[heart_rings] = p.r_heart;
  radius[rings] = p.r_torso;

  const int s = p.sectors;
  std::vector<Vec2> verts;
  verts.reserve(1 + static_cast<std::size_t>(rings) * s);
  verts.push_back({0.0, 0.0});
  for (int k = 1; k <= rings; ++k) {
    for (int j = 0; j < s; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / s;
      verts.push_back({radius[k] * std::cos(theta), radius[k] * std::sin(theta)});
    }
  }
  auto ring_vertex = [s](int k, int j) -> std::int32_t { return 1 + (k - 1) * s + ((j % s) + s) % s; };

  std::vector<Triangle> tris;
  tris.reserve(static_cast<std::size_t>(s) * (2 * rings - 1));
  auto add = [&](std::int32_t a, std::int32_t b, std::int32_t c, Region r) {
    const Vec2 pa = verts[a], pb = verts[b], pc = verts[c];
    const double cross = (pb.x - pa.x) * (pc.y - pa.y) - (pc.x - pa.x) * (pb.y - pa.y);
    if (cross > 0.0) tris.push_back({{a, b, c}, r});
    else tris.push_back({{a, c, b}, r});
  };

  for (int j = 0; j < s; ++j) add(0, ring_vertex(1, j), ring_vertex(1, j + 1), Region::Heart);
  for (int k = 1; k < rings; ++k) {
    const Region region = k < heart_rings ? Region::Heart : Region::Torso;
    for (int j = 0; j < s; ++j) {
      const std::int32_t a = ring_vertex(k, j);
      const std::int32_t b = ring_vertex(k, j + 1);
      const std::int32_t c = ring_vertex(k + 1, j + 1);
      const std::int32_t d = ring_vertex(k + 1, j);
      if ((j + k) % 2 == 0) {
        add(a, b, c, region);
        add(a, c, d, region);
      } else {
        add(a, b, d, region);
        add(b, c, d, region);
      }
    }
  }

  std::vector<BoundaryEdge> boundary;
  boundary.reserve(s);
  for (int j = 0; j < s; ++j) {
    boundary.push_back({{ring_vertex(rings, j), ring_vertex(rings, j + 1)}, BoundaryTag::TorsoOuter});
  }
  return TriMesh(std::move(verts), std::move(tris), std::move(boundary));
}

namespace {

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  // Next non-blank line split into tokens; throws at end of input.
  std::vector<std::string_view> next(const char* expecting) {
    while (std::getline(in_, line_)) {
      ++line_no_;
      tokens_.clear();
      std::size_t i = 0;
      while (i < line_.size()) {
        while (i < line_.size() && std::isspace(static_cast<unsigned char>(line_[i]))) ++i;
        const std::size_t start = i;
        while (i < line_.size() && !std::isspace(static_cast<unsigned char>(line_[i]))) ++i;
        if (i > start) tokens_.emplace_back(line_.data() + start, i - start);
      }
      if (!tokens_.empty()) return tokens_;
    }
    throw ParseError(fmt::format("unexpected end of file, expecting {}", expecting), line_no_ + 1);
  }

  [[nodiscard]] std::size_t line() const { return line_no_; }

 private:
  std::istringstream in_;
  std::string line_;
  std::vector<std::string_view> tokens_;
  std::size_t line_no_ = 0;
};

template <typename T>
T parse_number(std::string_view tok, std::size_t line, const char* what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ParseError(fmt::format("malformed {} '{}'", what, tok), line);
  }
  return value;
}

void expect_tokens(const std::vector<std::string_view>& toks, std::size_t n, std::size_t line,
                   const char* what) {
  if (toks.size() != n) {
    throw ParseError(fmt::format("{} line needs {} fields, found {}", what, n, toks.size()), line);
  }
}

}  // namespace

TriMesh parse_mesh(const std::string& text) {
  LineReader reader(text);
  auto head = reader.next("header");
  expect_tokens(head, 3, reader.line(), "header");
  const auto nv = parse_number<std::int64_t>(head[0], reader.line(), "vertex count");
  const auto nt = parse_number<std::int64_t>(head[1], reader.line(), "triangle count");
  const auto nb = parse_number<std::int64_t>(head[2], reader.line(), "boundary count");
  if (nv < 3 || nt < 1 || nb < 0 || nv > INT32_MAX || nt > INT32_MAX || nb > INT32_MAX) {
    throw ParseError(fmt::format("invalid counts {} {} {}", nv, nt, nb), reader.line());
  }

  std::vector<Vec2> verts(static_cast<std::size_t>(nv));
  for (auto& v : verts) {
    auto t = reader.next("vertex");
    expect_tokens(t, 2, reader.line(), "vertex");
    v.x = parse_number<double>(t[0], reader.line(), "coordinate");
    v.y = parse_number<double>(t[1], reader.line(), "coordinate");
  }

  auto vertex_index = [nv](std::string_view tok, std::size_t line) {
    const auto i = parse_number<std::int64_t>(tok, line, "vertex index");
    if (i < 0 || i >= nv) {
      throw ParseError(fmt::format("vertex index {} out of range [0, {})", i, nv), line);
    }
    return static_cast<std::int32_t>(i);
  };

  std::vector<Triangle> tris(static_cast<std::size_t>(nt));
  for (auto& tri : tris) {
    auto t = reader.next("triangle");
    expect_tokens(t, 4, reader.line(), "triangle");
    for (int k = 0; k < 3; ++k) tri.v[k] = vertex_index(t[k], reader.line());
    const auto tag = parse_number<int>(t[3], reader.line(), "region tag");
    if (tag != 1 && tag != 2) throw ParseError(fmt::format("unknown region tag {}", tag), reader.line());
    tri.region = static_cast<Region>(tag);
  }

  std::vector<BoundaryEdge> boundary(static_cast<std::size_t>(nb));
  for (auto& be : boundary) {
    auto t = reader.next("boundary edge");
    expect_tokens(t, 3, reader.line(), "boundary edge");
    be.v[0] = vertex_index(t[0], reader.line());
    be.v[1] = vertex_index(t[1], reader.line());
    const auto tag = parse_number<int>(t[2], reader.line(), "boundary tag");
    if (tag != 1) throw ParseError(fmt::format("unknown boundary tag {}", tag), reader.line());
    be.tag = BoundaryTag::TorsoOuter;
  }

  return TriMesh(std::move(verts), std::move(tris), std::move(boundary));
}

TriMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open mesh file {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_mesh(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()), e.line());
  }
}

std::string format_mesh(const TriMesh& mesh) {
  fmt::memory_buffer out;
  fmt::format_to(std::back_inserter(out), "{} {} {}\n", mesh.num_vertices(), mesh.num_triangles(),
                 mesh.boundary_edges().size());
  for (const auto& v : mesh.vertices()) fmt::format_to(std::back_inserter(out), "{:.17g} {:.17g}\n", v.x, v.y);
  for (const auto& t : mesh.triangles()) {
    fmt::format_to(std::back_inserter(out), "{} {} {} {}\n", t.v[0], t.v[1], t.v[2],
                   static_cast<int>(t.region));
  }
  for (const auto& e : mesh.boundary_edges()) {
    fmt::format_to(std::back_inserter(out), "{} {} {}\n", e.v[0], e.v[1], static_cast<int>(e.tag));
  }
  return fmt::to_string(out);
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write mesh file {}", path.string()));
  out << format_mesh(mesh);
  if (!out) throw Error(fmt::format("write failed for {}", path.string()));
}

}  // namespace ecgfwd
