#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ecgfwd {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

enum class Region : std::uint8_t { Heart = 1, Torso = 2 };
enum class BoundaryTag : std::uint8_t { TorsoOuter = 1 };

struct Triangle {
  std::array<std::int32_t, 3> v{};
  Region region = Region::Heart;
  friend bool operator==(const Triangle&, const Triangle&) = default;
};

struct Edge {
  std::array<std::int32_t, 2> v{};
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct BoundaryEdge {
  std::array<std::int32_t, 2> v{};
  BoundaryTag tag = BoundaryTag::TorsoOuter;
  friend bool operator==(const BoundaryEdge&, const BoundaryEdge&) = default;
};

/// Two-region triangulation: a heart embedded in a torso.
///
/// Construction validates every invariant (counterclockwise positive-area
/// triangles, outer boundary edges on exactly one triangle, edge-connected
/// regions) and derives the heart/torso interface. Immutable afterwards.
class TriMesh {
 public:
  TriMesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
          std::vector<BoundaryEdge> boundary_edges);

  [[nodiscard]] std::span<const Vec2> vertices() const { return vertices_; }
  [[nodiscard]] std::span<const Triangle> triangles() const { return triangles_; }
  [[nodiscard]] std::span<const BoundaryEdge> boundary_edges() const { return boundary_edges_; }
  /// Edges shared by one HEART and one TORSO triangle, sorted (lo, hi).
  [[nodiscard]] std::span<const Edge> interface_edges() const { return interface_edges_; }

  [[nodiscard]] std::size_t num_vertices() const { return vertices_.size(); }
  [[nodiscard]] std::size_t num_triangles() const { return triangles_.size(); }

  /// Vertices incident to at least one HEART triangle, ascending.
  [[nodiscard]] std::span<const std::int32_t> heart_vertices() const { return heart_vertices_; }
  /// Global vertex -> position in heart_vertices(), or -1.
  [[nodiscard]] std::int32_t heart_index(std::int32_t vertex) const { return heart_index_[vertex]; }
  /// Vertices on a TORSO_OUTER edge, ascending.
  [[nodiscard]] std::span<const std::int32_t> outer_vertices() const { return outer_vertices_; }

  [[nodiscard]] double signed_area(std::size_t tri) const;
  [[nodiscard]] double max_edge_length() const;
  [[nodiscard]] Vec2 centroid(std::size_t tri) const;

  friend bool operator==(const TriMesh& a, const TriMesh& b) {
    return a.vertices_ == b.vertices_ && a.triangles_ == b.triangles_ &&
           a.boundary_edges_ == b.boundary_edges_;
  }

 private:
  void validate_and_derive();

  std::vector<Vec2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryEdge> boundary_edges_;
  std::vector<Edge> interface_edges_;
  std::vector<std::int32_t> heart_vertices_;
  std::vector<std::int32_t> heart_index_;
  std::vector<std::int32_t> outer_vertices_;
};

struct DiskMeshParams {
  double r_heart = 1.0;
  double r_torso = 3.0;
  int rings = 8;
  int sectors = 32;

  friend bool operator==(const DiskMeshParams&, const DiskMeshParams&) = default;
};

/// Concentric polar grid with a vertex ring exactly on r_heart. Rings are
/// split between the two regions in proportion to their radial extent (at
/// least one ring each) and spaced uniformly within a region; every ring
/// carries `sectors` vertices. Quads are split along alternating diagonals.
TriMesh generate_disk_in_disk(const DiskMeshParams& params);

TriMesh load_mesh(const std::filesystem::path& path);
TriMesh parse_mesh(const std::string& text);
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path);
std::string format_mesh(const TriMesh& mesh);

}  // namespace ecgfwd
