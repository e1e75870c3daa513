#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecgfwd/activation.hpp"
#include "ecgfwd/bidomain.hpp"
#include "ecgfwd/formulations.hpp"
#include "ecgfwd/fronts.hpp"

namespace ecgfwd {

struct ReportRow {
  std::string study;
  std::string formulation;
  std::string recipe;
  std::string front;
  std::optional<double> eps;
  std::string noise_case;
  std::optional<double> amplitude;
  std::optional<std::uint64_t> seed;
  std::optional<double> time;  // empty means ALL
  std::string metric;
  std::optional<double> value;  // empty means the cell failed
};

struct ExperimentReport {
  static constexpr std::string_view kHeader =
      "study,formulation,recipe,front,eps,noise_case,amplitude,seed,time,metric,value";
  std::vector<ReportRow> rows;

  void append(const ExperimentReport& other);
  void write_csv(std::ostream& os) const;
  [[nodiscard]] std::string to_csv() const;
  static ExperimentReport parse_csv(std::string_view text);

  /// Rows matching every non-empty filter.
  [[nodiscard]] std::vector<const ReportRow*> select(std::string_view study, std::string_view formulation = {},
                                                     std::string_view metric = {}) const;
};

/// Everything the studies share: the reference run, its operators and
/// derived per-step norms.
struct ExperimentContext {
  const BidomainRun* run = nullptr;
  OperatorSet ops;
  std::vector<double> heart_mask;
  std::vector<double> stim_mask;
  /// ||u_ref^n||_{L2(torso)} per step.
  std::vector<double> ref_torso_norm;
  /// Steps whose reference torso norm exceeds `mask_fraction` times the
  /// largest one. Relative errors are only reported there.
  double mask_fraction = 1e-6;
  NeumannOptions solver;
  int threads = 1;

  static ExperimentContext make(const BidomainRun& run, const NeumannOptions& solver = {}, int threads = 1);
  [[nodiscard]] bool significant(std::size_t step) const;
  [[nodiscard]] double stimulus_at(double t) const;
  [[nodiscard]] std::vector<double> stimulus_current(double t) const;
};

struct FitOptions {
  int points = 10;
  std::uint64_t seed = 42;
};

/// Fits f_int from the run: random activated heart vertices outside the
/// stimulus disk, upstroke samples (v^n, recorded reaction^n).
CubicIonic fit_f_int(const ExperimentContext& ctx, const FitOptions& options = {});

/// Default recipe set: the reference, then the ionic-term substitutions, then
/// the derivative substitutions.
std::vector<RhsRecipe> default_verification_recipes();

/// F1 with each recipe on v_ref snapshots and F2 with v_ref, against u_ref.
/// Steps with every snapshot available (2 <= n <= N-1) that are significant.
ExperimentReport verification_study(const ExperimentContext& ctx, const std::vector<RhsRecipe>& recipes,
                                    const CubicIonic& f_int);

struct SweepOptions {
  std::vector<double> eps_grid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
  bool include_ms0d = true;
};

/// Parses "lo:hi:step" into lo, lo + step, ..., hi (inclusive within step/1e6).
std::vector<double> parse_eps_grid(std::string_view text);

/// F1 (analytic derivative + f_int) and F2 for every front over the
/// depolarization window [0, min(T, max psi + 2 max eps)].
ExperimentReport epsilon_sweep(const ExperimentContext& ctx, const ActivationMap& psi, const CubicIonic& f_int,
                               const SweepOptions& options = {});

enum class NoiseCase { VrefPlusW, VepsPlusW, PsiFieldNoise, PsiScalarShift };
std::string_view to_string(NoiseCase c);
NoiseCase parse_noise_case(std::string_view text);

struct NoiseOptions {
  double eps = 2.5;
  std::vector<NoiseCase> cases{NoiseCase::VrefPlusW, NoiseCase::VepsPlusW, NoiseCase::PsiFieldNoise,
                               NoiseCase::PsiScalarShift};
  int realisations = 200;
  std::vector<double> amplitudes{0.01, 0.05, 0.10};
  std::uint64_t base_seed = 42;
  double t_eval = 35.0;
};

/// Seed of realisation k: splitmix64(base_seed ^ k).
std::uint64_t realisation_seed(std::uint64_t base_seed, std::uint64_t k);
std::uint64_t splitmix64(std::uint64_t x);

/// Time scale of the time-valued noise: stimulus diameter / mean front speed.
double noise_time_scale(const ExperimentContext& ctx, const ActivationMap& psi);

/// F2 with noisy inputs at t_eval. Rows: the noiseless error per case, every
/// realisation, then q1/median/q3/min/max and the failure count per
/// (case, amplitude).
ExperimentReport noise_study(const ExperimentContext& ctx, const ActivationMap& psi, const NoiseOptions& options);

/// Type-7 (linear interpolation) quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace ecgfwd
