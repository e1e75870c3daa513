#include "ecgfwd/formulations.hpp"

#include <fmt/format.h>

#include "ecgfwd/errors.hpp"

namespace ecgfwd {

std::string_view to_string(DerivativeScheme s) {
  switch (s) {
    case DerivativeScheme::Analytic: return "analytic";
    case DerivativeScheme::Sbdf2: return "sbdf2";
    case DerivativeScheme::EulerCentered: return "euler_centered";
    case DerivativeScheme::EulerExplicit: return "euler_explicit";
    case DerivativeScheme::Recorded: return "recorded";
  }
  return "?";
}

std::string_view to_string(IonicChoice c) {
  switch (c) {
    case IonicChoice::Recorded: return "recorded";
    case IonicChoice::FInt: return "f_int";
    case IonicChoice::FMsWithH: return "f_ms_with_h";
    case IonicChoice::FMsReduced: return "f_ms_reduced";
  }
  return "?";
}

std::string_view to_string(Formulation f) { return f == Formulation::Source ? "F1" : "F2"; }

std::string RhsRecipe::name() const {
  return fmt::format("{}+{}", to_string(derivative), to_string(ionic));
}

RhsRecipe RhsRecipe::parse(std::string_view text) {
  if (text == "recorded") return {};
  const auto plus = text.find('+');
  if (plus == std::string_view::npos) {
    throw InvalidArgument(fmt::format("recipe '{}' must look like <derivative>+<ionic>", text));
  }
  const auto d = text.substr(0, plus);
  const auto i = text.substr(plus + 1);
  RhsRecipe r;
  bool found = false;
  for (auto s : {DerivativeScheme::Analytic, DerivativeScheme::Sbdf2, DerivativeScheme::EulerCentered,
                 DerivativeScheme::EulerExplicit, DerivativeScheme::Recorded}) {
    if (to_string(s) == d) {
      r.derivative = s;
      found = true;
    }
  }
  if (!found) throw InvalidArgument(fmt::format("unknown derivative scheme '{}'", d));
  found = false;
  for (auto c : {IonicChoice::Recorded, IonicChoice::FInt, IonicChoice::FMsWithH, IonicChoice::FMsReduced}) {
    if (to_string(c) == i) {
      r.ionic = c;
      found = true;
    }
  }
  if (!found) throw InvalidArgument(fmt::format("unknown ionic choice '{}'", i));
  return r;
}

namespace {

void require(std::span<const double> field, std::size_t n, const RhsRecipe& r, const char* what) {
  if (field.empty()) {
    throw InvalidArgument(fmt::format("recipe {} needs {} which is not available", r.name(), what));
  }
  if (field.size() != n) throw InvalidArgument(fmt::format("recipe {}: {} has the wrong size", r.name(), what));
}

}  // namespace

std::vector<double> f1_rhs(const F1Data& d, const RhsRecipe& r) {
  const std::size_t n = d.heart_mask.size();
  if (n == 0) throw InvalidArgument("f1_rhs: heart mask required");
  std::vector<double> out(n, 0.0);
  const double dt = d.dt;

  switch (r.derivative) {
    case DerivativeScheme::Sbdf2:
      require(d.v_cur, n, r, "v^n");
      require(d.v_prev, n, r, "v^{n-1}");
      require(d.v_prev2, n, r, "v^{n-2}");
      for (std::size_t i = 0; i < n; ++i) out[i] = (1.5 * d.v_cur[i] - 2.0 * d.v_prev[i] + 0.5 * d.v_prev2[i]) / dt;
      break;
    case DerivativeScheme::EulerCentered:
      require(d.v_next, n, r, "v^{n+1}");
      require(d.v_prev, n, r, "v^{n-1}");
      for (std::size_t i = 0; i < n; ++i) out[i] = (d.v_next[i] - d.v_prev[i]) / (2.0 * dt);
      break;
    case DerivativeScheme::EulerExplicit:
      require(d.v_cur, n, r, "v^n");
      require(d.v_prev, n, r, "v^{n-1}");
      for (std::size_t i = 0; i < n; ++i) out[i] = (d.v_cur[i] - d.v_prev[i]) / dt;
      break;
    case DerivativeScheme::Analytic:
      require(d.analytic_deriv, n, r, "the analytic derivative");
      for (std::size_t i = 0; i < n; ++i) out[i] = d.analytic_deriv[i];
      break;
    case DerivativeScheme::Recorded:
      require(d.recorded_rhs, n, r, "the recorded right-hand side");
      require(d.recorded_reaction, n, r, "the recorded reaction");
      if (r.ionic == IonicChoice::Recorded) {
        for (std::size_t i = 0; i < n; ++i) out[i] = d.heart_mask[i] != 0.0 ? d.recorded_rhs[i] : 0.0;
        return out;
      }
      for (std::size_t i = 0; i < n; ++i) out[i] = d.recorded_rhs[i] - d.recorded_reaction[i];
      break;
  }

  const bool needs_stim = r.ionic != IonicChoice::Recorded && !d.stimulus.empty();
  if (needs_stim && d.stimulus.size() != n) throw InvalidArgument("f1_rhs: stimulus has the wrong size");
  switch (r.ionic) {
    case IonicChoice::Recorded:
      require(d.recorded_reaction, n, r, "the recorded reaction");
      for (std::size_t i = 0; i < n; ++i) out[i] += d.recorded_reaction[i];
      break;
    case IonicChoice::FInt:
      require(d.v_cur, n, r, "v^n");
      if (!d.f_int) throw InvalidArgument(fmt::format("recipe {} needs a fitted cubic", r.name()));
      for (std::size_t i = 0; i < n; ++i) out[i] += (*d.f_int)(d.v_cur[i]);
      break;
    case IonicChoice::FMsWithH:
      require(d.v_cur, n, r, "v^n");
      require(d.h_cur, n, r, "h^n");
      if (!d.ms) throw InvalidArgument("f1_rhs: model parameters required");
      for (std::size_t i = 0; i < n; ++i) out[i] += ionic_term(d.v_cur[i], d.h_cur[i], *d.ms);
      break;
    case IonicChoice::FMsReduced:
      require(d.v_cur, n, r, "v^n");
      if (!d.ms) throw InvalidArgument("f1_rhs: model parameters required");
      for (std::size_t i = 0; i < n; ++i) out[i] -= f_ms_reduced(d.v_cur[i], *d.ms);
      break;
  }
  if (needs_stim) {
    for (std::size_t i = 0; i < n; ++i) out[i] -= d.stimulus[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (d.heart_mask[i] == 0.0) out[i] = 0.0;
  }
  return out;
}

PotentialSolution solve_f1(const OperatorSet& ops, std::span<const double> rhs_heart,
                           const NeumannOptions& options) {
  const auto& mh = ops.mass_heart.diag;
  if (rhs_heart.size() != mh.size()) throw InvalidArgument("solve_f1: rhs size mismatch");
  std::vector<double> s(rhs_heart.begin(), rhs_heart.end());
  if (options.enforce_compat) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      num += mh[i] * s[i];
      den += mh[i];
    }
    const double mean = num / den;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (mh[i] > 0.0) s[i] -= mean;
    }
  }
  std::vector<double> b(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) b[i] = mh[i] * s[i];
  PotentialSolution sol;
  sol.formulation = Formulation::Source;
  sol.u = solve_neumann(ops.source, b, options, &sol.stats);
  return sol;
}

PotentialSolution solve_f2(const OperatorSet& ops, std::span<const double> vtilde,
                           const NeumannOptions& options) {
  if (vtilde.size() != ops.intra.matrix.rows()) throw InvalidArgument("solve_f2: field size mismatch");
  for (double x : vtilde) {
    if (!std::isfinite(x)) throw InvalidArgument("solve_f2: vtilde must be finite");
  }
  std::vector<double> b = ops.intra.matrix.multiply(vtilde);
  for (double& x : b) x = -x;
  PotentialSolution sol;
  sol.formulation = Formulation::Balance;
  sol.u = solve_neumann(ops.balance, b, options, &sol.stats);
  return sol;
}

double relative_error(const OperatorSet& ops, const MassOperator& norm_mass, std::span<const double> u,
                      std::span<const double> ref) {
  const auto gu = remove_weighted_mean(u, ops.mass_all.diag);
  const auto gr = remove_weighted_mean(ref, ops.mass_all.diag);
  std::vector<double> diff(gu.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = gu[i] - gr[i];
  return l2_norm(norm_mass, diff) / l2_norm(norm_mass, gr);
}

}  // namespace ecgfwd
