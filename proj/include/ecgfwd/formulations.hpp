#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecgfwd/bidomain.hpp"
#include "ecgfwd/ionic.hpp"

namespace ecgfwd {

enum class DerivativeScheme { Analytic, Sbdf2, EulerCentered, EulerExplicit, Recorded };
enum class IonicChoice { Recorded, FInt, FMsWithH, FMsReduced };

/// How the source formulation's right-hand side d_t v + f(v) is built.
struct RhsRecipe {
  DerivativeScheme derivative = DerivativeScheme::Recorded;
  IonicChoice ionic = IonicChoice::Recorded;

  /// "<derivative>+<ionic>", e.g. "sbdf2+f_int"; "recorded" alone means
  /// "recorded+recorded".
  [[nodiscard]] std::string name() const;
  static RhsRecipe parse(std::string_view text);
  friend bool operator==(const RhsRecipe&, const RhsRecipe&) = default;
};

std::string_view to_string(DerivativeScheme s);
std::string_view to_string(IonicChoice c);

/// Data available at one output step. Heart fields are full length; an empty
/// span means "not available". Snapshots are v^{n-2}, v^{n-1}, v^n, v^{n+1}.
struct F1Data {
  double dt = 0.0;
  std::span<const double> v_prev2;
  std::span<const double> v_prev;
  std::span<const double> v_cur;
  std::span<const double> v_next;
  std::span<const double> h_cur;
  std::span<const double> analytic_deriv;
  std::span<const double> recorded_rhs;
  std::span<const double> recorded_reaction;
  /// Known applied current, subtracted from non-recorded ionic terms.
  std::span<const double> stimulus;
  /// Mask of heart vertices (nonzero entries).
  std::span<const double> heart_mask;
  const MSParams* ms = nullptr;
  std::optional<CubicIonic> f_int;
};

/// Pointwise source d_t v + f on heart vertices (0 elsewhere).
///
/// Derivative: SBDF2 (1.5 v^n - 2 v^{n-1} + 0.5 v^{n-2}) / dt, centered
/// (v^{n+1} - v^{n-1}) / (2 dt), explicit (v^n - v^{n-1}) / dt, the analytic
/// front derivative, or the solver's realized derivative (RECORDED).
/// Ionic: the solver's extrapolated reaction (RECORDED), or f_int, I_ion with
/// the gate, or the reduced model, each evaluated at v^n.
std::vector<double> f1_rhs(const F1Data& data, const RhsRecipe& recipe);

enum class Formulation { Source, Balance };
std::string_view to_string(Formulation f);

struct PotentialSolution {
  std::vector<double> u;
  Formulation formulation = Formulation::Source;
  std::optional<RhsRecipe> recipe;
  SolveStats stats;
};

/// -div(sigma_e grad u) = rhs in the heart, -div(sigma_t grad u) = 0 in the
/// torso, as one conforming operator. With enforce_compat the heart-mass mean
/// of rhs is removed first.
PotentialSolution solve_f1(const OperatorSet& ops, std::span<const double> rhs_heart,
                           const NeumannOptions& options = {});

/// -div((sigma_i + sigma_e) grad u) = div(sigma_i grad vtilde) in the heart,
/// Laplace in the torso.
PotentialSolution solve_f2(const OperatorSet& ops, std::span<const double> vtilde,
                           const NeumannOptions& options = {});

/// ||g(u) - g(ref)||_M / ||g(ref)||_M where g removes the all-region mean.
double relative_error(const OperatorSet& ops, const MassOperator& norm_mass, std::span<const double> u,
                      std::span<const double> ref);

}  // namespace ecgfwd
