#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "ecgfwd/bidomain.hpp"
#include "ecgfwd/fronts.hpp"
#include "ecgfwd/mesh.hpp"
#include "ecgfwd/operators.hpp"

namespace ecgfwd {

struct FrontSpec {
  enum class Kind { Heaviside, Ms0d };
  Kind kind = Kind::Heaviside;
  double epsilon = 2.5;

  friend bool operator==(const FrontSpec&, const FrontSpec&) = default;
};

/// Everything a pipeline needs, parsed from the INI-style file:
///
///   [mesh]          file, r_heart, r_torso, rings, sectors
///   [conductivity]  sigma_i, sigma_e, sigma_t
///   [ionic]         tau_in, tau_out, tau_open, tau_close, v_gate
///   [time]          dt, T
///   [stimulus]      center_x, center_y, radius, amplitude, t0, half_width
///   [front]         front (heaviside | ms0d), epsilon
///   [solver]        tol, bidomain_tol, max_iter_factor, enforce_compat
struct RunConfig {
  /// Mesh file; empty means "generate from the disk parameters".
  std::string mesh_file;
  DiskMeshParams mesh{16.0, 32.0, 32, 100};
  ConductivityMap conductivity{};
  MSParams ionic{};
  double dt = 0.1;
  double T = 50.0;
  Stimulus stimulus{};
  FrontSpec front{};
  /// Elliptic (formulation) solves.
  double solver_tol = 1e-13;
  /// Coupled bidomain step. Tighter, because the reference potential feeds
  /// every comparison downstream.
  double bidomain_tol = 1e-15;
  int max_iter_factor = 50;
  bool enforce_compat = true;

  void validate() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses and validates. Unknown sections or keys, malformed values and
/// violated constraints raise ConfigError naming the section, key and line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Every value, defaults included, in the same format (17 significant digits),
/// so parse_config(format_config(c)) == c.
std::string format_config(const RunConfig& config);

/// Loads or generates the mesh. Relative mesh paths resolve against `base`.
std::shared_ptr<const TriMesh> make_mesh(const RunConfig& config, const std::filesystem::path& base = {});
BidomainConfig make_bidomain_config(const RunConfig& config, std::shared_ptr<const TriMesh> mesh);
FrontShape make_front(const RunConfig& config);
NeumannOptions make_solver_options(const RunConfig& config);

}  // namespace ecgfwd
