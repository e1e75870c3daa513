#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ecgfwd/activation.hpp"
#include "ecgfwd/bidomain.hpp"
#include "ecgfwd/config.hpp"

namespace ecgfwd {

/// Rows are time steps, the first column is t and the remaining columns
/// are vertex ids (header `t,<id>,<id>,...`).
struct FieldTable {
  std::vector<std::int32_t> ids;
  std::vector<double> times;
  std::vector<std::vector<double>> rows;  // rows[n][j] belongs to ids[j]
};

std::string format_field_csv(const FieldTable& table);
FieldTable parse_field_csv(const std::string& text);
FieldTable read_field_csv(const std::filesystem::path& path);

/// Columns `ids` taken from full-length nodal fields.
FieldTable make_field_table(std::span<const double> times, const std::vector<std::vector<double>>& fields,
                            std::span<const std::int32_t> ids);
/// Scatters a table back to full-length fields (zeros off its columns).
std::vector<std::vector<double>> expand_field_table(const FieldTable& table, std::size_t num_vertices);

/// Throws unless `force` or `path` does not exist yet.
void ensure_writable(const std::filesystem::path& path, bool force);
/// Writes text to `path`; refuses to overwrite unless `force`.
void write_output(const std::filesystem::path& path, const std::string& text, bool force);
std::string read_text(const std::filesystem::path& path);

/// Run directory layout.
struct RunFiles {
  static constexpr const char* kMesh = "mesh.txt";
  static constexpr const char* kMeta = "run_meta";
  static constexpr const char* kV = "fields_v.csv";
  static constexpr const char* kU = "fields_u.csv";
  static constexpr const char* kH = "fields_h.csv";
  static constexpr const char* kRhs = "recorded_rhs.csv";
  static constexpr const char* kReaction = "recorded_reaction.csv";
};

/// Writes mesh.txt, run_meta (the effective config, mesh file = mesh.txt)
/// and the field CSVs. v, h and the recorded terms have heart-vertex
/// columns; u has every vertex.
void save_run(const BidomainRun& run, const RunConfig& config, const std::filesystem::path& dir, bool force);
/// ensure_writable over every file save_run would write.
void ensure_run_writable(const std::filesystem::path& dir, bool force);

struct LoadedRun {
  RunConfig config;
  std::shared_ptr<const TriMesh> mesh;
  BidomainRun run;
};
LoadedRun load_run(const std::filesystem::path& dir);

/// `vertex_id,psi` rows over heart vertices; unactivated vertices read inf.
std::string format_activation_csv(const TriMesh& mesh, const ActivationMap& act);

}  // namespace ecgfwd
