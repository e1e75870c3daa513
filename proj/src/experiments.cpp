#include "ecgfwd/experiments.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "ecgfwd/errors.hpp"
#include "ecgfwd/parallel.hpp"

namespace ecgfwd {

// ---------------------------------------------------------------- report

void ExperimentReport::append(const ExperimentReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

namespace {

std::string num(double x) { return fmt::format("{}", x); }

template <typename T>
std::string opt(const std::optional<T>& x) {
  return x ? fmt::format("{}", *x) : std::string{};
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError(fmt::format("bad number '{}'", s), line);
  }
  return v;
}

}  // namespace

void ExperimentReport::write_csv(std::ostream& os) const {
  os << kHeader << '\n';
  for (const auto& r : rows) {
    os << r.study << ',' << r.formulation << ',' << r.recipe << ',' << r.front << ',' << opt(r.eps) << ','
       << r.noise_case << ',' << opt(r.amplitude) << ',' << opt(r.seed) << ','
       << (r.time ? num(*r.time) : std::string("ALL")) << ',' << r.metric << ','
       << (r.value ? num(*r.value) : std::string("error")) << '\n';
  }
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

ExperimentReport ExperimentReport::parse_csv(std::string_view text) {
  ExperimentReport rep;
  std::size_t line_no = 0;
  bool header = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != kHeader) throw ParseError("unexpected report header", line_no);
      header = false;
      continue;
    }
    const auto f = split_commas(line);
    if (f.size() != 11) throw ParseError(fmt::format("expected 11 fields, got {}", f.size()), line_no);
    ReportRow r;
    r.study = f[0];
    r.formulation = f[1];
    r.recipe = f[2];
    r.front = f[3];
    if (!f[4].empty()) r.eps = parse_double(f[4], line_no);
    r.noise_case = f[5];
    if (!f[6].empty()) r.amplitude = parse_double(f[6], line_no);
    if (!f[7].empty()) {
      std::uint64_t s = 0;
      const auto [ptr, ec] = std::from_chars(f[7].data(), f[7].data() + f[7].size(), s);
      if (ec != std::errc{} || ptr != f[7].data() + f[7].size()) throw ParseError("bad seed", line_no);
      r.seed = s;
    }
    if (f[8] != "ALL") r.time = parse_double(f[8], line_no);
    r.metric = f[9];
    if (f[10] != "error") r.value = parse_double(f[10], line_no);
    rep.rows.push_back(std::move(r));
  }
  if (header) throw ParseError("empty report", line_no);
  return rep;
}

std::vector<const ReportRow*> ExperimentReport::select(std::string_view study, std::string_view formulation,
                                                       std::string_view metric) const {
  std::vector<const ReportRow*> out;
  for (const auto& r : rows) {
    if (!study.empty() && r.study != study) continue;
    if (!formulation.empty() && r.formulation != formulation) continue;
    if (!metric.empty() && r.metric != metric) continue;
    out.push_back(&r);
  }
  return out;
}

// --------------------------------------------------------------- context

ExperimentContext ExperimentContext::make(const BidomainRun& run, const NeumannOptions& solver, int threads) {
  if (run.steps() < 3) throw InvalidArgument("experiments need at least three recorded steps");
  ExperimentContext ctx;
  ctx.run = &run;
  ctx.ops = build_operators(*run.mesh, run.config.conductivity);
  ctx.heart_mask.assign(run.mesh->num_vertices(), 0.0);
  for (std::int32_t g : run.mesh->heart_vertices()) ctx.heart_mask[g] = 1.0;
  ctx.stim_mask = stimulus_mask(*run.mesh, run.config.stimulus);
  ctx.ref_torso_norm.reserve(run.steps());
  for (const auto& u : run.u) ctx.ref_torso_norm.push_back(l2_norm(ctx.ops.mass_torso, u));
  ctx.solver = solver;
  ctx.threads = threads;
  return ctx;
}

bool ExperimentContext::significant(std::size_t step) const {
  const double peak = *std::max_element(ref_torso_norm.begin(), ref_torso_norm.end());
  return peak > 0.0 && ref_torso_norm[step] > mask_fraction * peak;
}

double ExperimentContext::stimulus_at(double t) const { return run->config.stimulus.pulse(t); }

std::vector<double> ExperimentContext::stimulus_current(double t) const {
  const double p = stimulus_at(t);
  std::vector<double> out(stim_mask.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stim_mask[i] * p;
  return out;
}

// ------------------------------------------------------------------ f_int

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t realisation_seed(std::uint64_t base_seed, std::uint64_t k) { return splitmix64(base_seed ^ k); }

CubicIonic fit_f_int(const ExperimentContext& ctx, const FitOptions& options) {
  const BidomainRun& run = *ctx.run;
  std::vector<std::int32_t> candidates;
  for (std::int32_t g : run.mesh->heart_vertices()) {
    if (ctx.stim_mask[g] != 0.0) continue;
    double vmax = 0.0;
    for (const auto& v : run.v) vmax = std::max(vmax, v[g]);
    if (vmax >= 0.5) candidates.push_back(g);
  }
  if (candidates.size() < static_cast<std::size_t>(options.points) || options.points < 1) {
    throw InvalidArgument(fmt::format("f_int fit: {} points requested, {} activated vertices available",
                                      options.points, candidates.size()));
  }
  // Partial Fisher-Yates on the raw engine output keeps the choice portable.
  std::mt19937_64 rng(splitmix64(options.seed));
  std::vector<std::vector<IonicSample>> samples;
  for (int k = 0; k < options.points; ++k) {
    const std::size_t remaining = candidates.size() - static_cast<std::size_t>(k);
    const std::size_t j = static_cast<std::size_t>(k) + static_cast<std::size_t>(rng() % remaining);
    std::swap(candidates[static_cast<std::size_t>(k)], candidates[j]);
    const std::int32_t g = candidates[static_cast<std::size_t>(k)];

    std::size_t peak = 0;
    for (std::size_t n = 0; n < run.steps(); ++n) {
      if (run.v[n][g] > run.v[peak][g]) peak = n;
    }
    std::vector<IonicSample> pts;
    bool started = false;
    for (std::size_t n = 2; n <= peak; ++n) {
      started = started || run.v[n][g] >= 0.05;
      if (started) pts.emplace_back(run.v[n][g], run.recorded_reaction[n][g]);
    }
    samples.push_back(std::move(pts));
  }
  return fit_cubic_ionic(samples);
}

// ----------------------------------------------------------- verification

std::vector<RhsRecipe> default_verification_recipes() {
  using D = DerivativeScheme;
  using I = IonicChoice;
  return {{D::Recorded, I::Recorded},      {D::Sbdf2, I::FInt},          {D::Sbdf2, I::FMsWithH},
          {D::Sbdf2, I::FMsReduced},       {D::EulerCentered, I::Recorded}, {D::EulerExplicit, I::Recorded}};
}

namespace {

std::span<const double> field(const std::vector<std::vector<double>>& series, std::size_t n) {
  return n < series.size() ? std::span<const double>(series[n]) : std::span<const double>{};
}

F1Data snapshot_data(const ExperimentContext& ctx, std::size_t n, const CubicIonic& f_int,
                     const std::vector<double>& stim) {
  const BidomainRun& run = *ctx.run;
  F1Data d;
  d.dt = run.dt();
  if (n >= 2) d.v_prev2 = run.v[n - 2];
  if (n >= 1) d.v_prev = run.v[n - 1];
  d.v_cur = run.v[n];
  d.v_next = field(run.v, n + 1);
  d.h_cur = run.h[n];
  d.recorded_rhs = run.recorded_rhs[n];
  d.recorded_reaction = run.recorded_reaction[n];
  d.stimulus = stim;
  d.heart_mask = ctx.heart_mask;
  d.ms = &run.config.ionic;
  d.f_int = f_int;
  return d;
}

std::optional<double> guarded(auto&& fn) {
  try {
    const double v = fn();
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

double time_max(const std::vector<std::optional<double>>& xs) {
  double m = 0.0;
  for (const auto& x : xs) {
    if (!x) return std::numeric_limits<double>::quiet_NaN();
    m = std::max(m, *x);
  }
  return m;
}

// sqrt(sum_n (e_n r_n)^2 / sum_n r_n^2) for per-step relative errors e_n and
// reference norms r_n.
double spacetime_l2(const std::vector<std::optional<double>>& rel, const std::vector<double>& ref_norm) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t s = 0; s < rel.size(); ++s) {
    if (!rel[s]) return std::numeric_limits<double>::quiet_NaN();
    const double e = *rel[s] * ref_norm[s];
    num += e * e;
    den += ref_norm[s] * ref_norm[s];
  }
  return std::sqrt(num / den);
}

std::optional<double> finite_or_empty(double x) {
  return std::isfinite(x) ? std::optional<double>(x) : std::nullopt;
}

}  // namespace

ExperimentReport verification_study(const ExperimentContext& ctx, const std::vector<RhsRecipe>& recipes,
                                    const CubicIonic& f_int) {
  const BidomainRun& run = *ctx.run;
  std::vector<std::size_t> steps;
  for (std::size_t n = 2; n + 1 < run.steps(); ++n) {
    if (ctx.significant(n)) steps.push_back(n);
  }
  if (steps.empty()) throw InvalidArgument("verification: no step with a significant torso potential");

  const std::size_t nr = recipes.size();
  // Column nr holds F2.
  std::vector<std::vector<std::optional<double>>> err(nr + 1, std::vector<std::optional<double>>(steps.size()));
  std::vector<double> ref_norm(steps.size());
  parallel_for(steps.size(), ctx.threads, [&](std::size_t s) {
    const std::size_t n = steps[s];
    ref_norm[s] = l2_norm(ctx.ops.mass_torso, remove_weighted_mean(run.u[n], ctx.ops.mass_all.diag));
    const auto stim = ctx.stimulus_current(run.times[n]);
    const F1Data data = snapshot_data(ctx, n, f_int, stim);
    for (std::size_t r = 0; r < nr; ++r) {
      err[r][s] = guarded([&] {
        const auto rhs = f1_rhs(data, recipes[r]);
        const auto sol = solve_f1(ctx.ops, rhs, ctx.solver);
        return relative_error(ctx.ops, ctx.ops.mass_torso, sol.u, run.u[n]);
      });
    }
    err[nr][s] = guarded([&] {
      const auto sol = solve_f2(ctx.ops, run.v[n], ctx.solver);
      return relative_error(ctx.ops, ctx.ops.mass_torso, sol.u, run.u[n]);
    });
  });

  ExperimentReport rep;
  for (std::size_t r = 0; r <= nr; ++r) {
    ReportRow base;
    base.study = "verify";
    base.formulation = r < nr ? "F1" : "F2";
    base.recipe = r < nr ? recipes[r].name() : "";
    base.front = "vref";
    for (std::size_t s = 0; s < steps.size(); ++s) {
      ReportRow row = base;
      row.time = run.times[steps[s]];
      row.metric = "rel_l2_torso";
      row.value = err[r][s];
      rep.rows.push_back(std::move(row));
    }
    ReportRow row = base;
    row.metric = "max_rel_l2_torso";
    row.value = finite_or_empty(time_max(err[r]));
    rep.rows.push_back(row);
    row.metric = "rel_l2_torso_spacetime";
    row.value = finite_or_empty(spacetime_l2(err[r], ref_norm));
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

// ----------------------------------------------------------------- sweep

std::vector<double> parse_eps_grid(std::string_view text) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(':', start);
    const auto tok = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw InvalidArgument(fmt::format("bad epsilon grid '{}'", text));
    }
    parts.push_back(v);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (parts.size() != 3) throw InvalidArgument(fmt::format("epsilon grid '{}' must be lo:hi:step", text));
  const double lo = parts[0];
  const double hi = parts[1];
  const double step = parts[2];
  if (!(lo > 0.0) || !(hi >= lo) || !(step > 0.0)) {
    throw InvalidArgument(fmt::format("epsilon grid '{}' needs 0 < lo <= hi and step > 0", text));
  }
  std::vector<double> grid;
  for (long k = 0;; ++k) {
    const double e = lo + static_cast<double>(k) * step;
    if (e > hi + step * 1e-6) break;
    grid.push_back(e);
  }
  return grid;
}

namespace {

struct SweepCell {
  std::optional<double> f1_rel_l2;
  std::optional<double> f2_rel_l2;
  std::optional<double> f1_rel_l1_boundary;
  std::optional<double> f2_rel_l1_boundary;
  std::optional<double> f1_l1_boundary;  // absolute, for the space-time metric
  std::optional<double> f2_l1_boundary;
  double vtilde_rel_l2_heart = 0.0;
};

}  // namespace

ExperimentReport epsilon_sweep(const ExperimentContext& ctx, const ActivationMap& psi, const CubicIonic& f_int,
                               const SweepOptions& options) {
  const BidomainRun& run = *ctx.run;
  if (options.eps_grid.empty() && !options.include_ms0d) throw InvalidArgument("sweep: no front requested");
  for (double e : options.eps_grid) {
    if (!(e > 0.0)) throw InvalidArgument(fmt::format("epsilon must be > 0 (got {})", e));
  }

  std::vector<FrontShape> fronts;
  std::vector<std::optional<double>> front_eps;
  for (double e : options.eps_grid) {
    fronts.emplace_back(SmoothedHeaviside{e});
    front_eps.emplace_back(e);
  }
  if (options.include_ms0d) {
    fronts.emplace_back(make_ms0d_front(run.config.ionic));
    front_eps.emplace_back(std::nullopt);
  }

  double max_eps = 0.0;
  for (double e : options.eps_grid) max_eps = std::max(max_eps, e);
  const double t_end = std::min(run.times.back(), psi.max_finite() + 2.0 * max_eps);
  std::vector<std::size_t> window;
  for (std::size_t n = 0; n < run.steps() && run.times[n] <= t_end + 1e-9 * run.dt(); ++n) window.push_back(n);

  std::vector<double> ref_l1(run.steps());
  for (std::size_t n = 0; n < run.steps(); ++n) {
    ref_l1[n] = l1_norm(ctx.ops.mass_outer, remove_weighted_mean(run.u[n], ctx.ops.mass_all.diag));
  }

  const std::size_t nw = window.size();
  std::vector<SweepCell> cells(fronts.size() * nw);
  parallel_for(cells.size(), ctx.threads, [&](std::size_t idx) {
    const std::size_t f = idx / nw;
    const std::size_t n = window[idx % nw];
    const double t = run.times[n];
    const auto vt = build_vtilde(fronts[f], psi.psi, t);
    const auto dvt = build_vtilde_deriv(fronts[f], psi.psi, t);
    const auto stim = ctx.stimulus_current(t);
    const auto uref = remove_weighted_mean(run.u[n], ctx.ops.mass_all.diag);
    SweepCell& cell = cells[idx];

    auto diff_norms = [&](const std::vector<double>& u, std::optional<double>& rel_l2,
                          std::optional<double>& rel_l1, std::optional<double>& abs_l1) {
      const auto g = remove_weighted_mean(u, ctx.ops.mass_all.diag);
      std::vector<double> d(g.size());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[i] - uref[i];
      const double l1 = l1_norm(ctx.ops.mass_outer, d);
      abs_l1 = l1;
      if (ctx.significant(n)) {
        rel_l2 = l2_norm(ctx.ops.mass_torso, d) / ctx.ref_torso_norm[n];
        rel_l1 = l1 / ref_l1[n];
      }
    };

    try {
      F1Data data;
      data.dt = run.dt();
      data.v_cur = vt;
      data.analytic_deriv = dvt;
      data.stimulus = stim;
      data.heart_mask = ctx.heart_mask;
      data.ms = &run.config.ionic;
      data.f_int = f_int;
      const auto rhs = f1_rhs(data, {DerivativeScheme::Analytic, IonicChoice::FInt});
      diff_norms(solve_f1(ctx.ops, rhs, ctx.solver).u, cell.f1_rel_l2, cell.f1_rel_l1_boundary,
                 cell.f1_l1_boundary);
    } catch (const std::exception&) {
      cell.f1_l1_boundary.reset();
    }
    try {
      diff_norms(solve_f2(ctx.ops, vt, ctx.solver).u, cell.f2_rel_l2, cell.f2_rel_l1_boundary,
                 cell.f2_l1_boundary);
    } catch (const std::exception&) {
      cell.f2_l1_boundary.reset();
    }
    std::vector<double> dv(vt.size());
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = vt[i] - run.v[n][i];
    const double ref = l2_norm(ctx.ops.mass_heart, run.v[n]);
    cell.vtilde_rel_l2_heart = ref > 0.0 ? l2_norm(ctx.ops.mass_heart, dv) / ref : 0.0;
  });

  double ref_spacetime = 0.0;
  for (std::size_t n : window) ref_spacetime += run.dt() * ref_l1[n];

  ExperimentReport rep;
  std::vector<std::optional<double>> f1_st(fronts.size()), f2_st(fronts.size());
  for (std::size_t f = 0; f < fronts.size(); ++f) {
    ReportRow base;
    base.study = "sweep";
    base.front = front_eps[f] ? "heaviside" : "ms0d";
    base.eps = front_eps[f];
    for (int form = 0; form < 2; ++form) {
      ReportRow fb = base;
      fb.formulation = form == 0 ? "F1" : "F2";
      fb.recipe = form == 0 ? RhsRecipe{DerivativeScheme::Analytic, IonicChoice::FInt}.name() : "";
      std::vector<std::optional<double>> per_time;
      std::vector<double> per_time_ref;
      double acc = 0.0;
      bool failed = false;
      for (std::size_t w = 0; w < nw; ++w) {
        const SweepCell& c = cells[f * nw + w];
        const auto& abs_l1 = form == 0 ? c.f1_l1_boundary : c.f2_l1_boundary;
        if (!abs_l1) failed = true;
        else acc += run.dt() * *abs_l1;
      }
      for (const bool l2 : {true, false}) {
        for (std::size_t w = 0; w < nw; ++w) {
          const std::size_t n = window[w];
          if (!ctx.significant(n)) continue;
          const SweepCell& c = cells[f * nw + w];
          const auto& v = form == 0 ? (l2 ? c.f1_rel_l2 : c.f1_rel_l1_boundary)
                                    : (l2 ? c.f2_rel_l2 : c.f2_rel_l1_boundary);
          if (l2) {
            per_time.push_back(v);
            per_time_ref.push_back(ctx.ref_torso_norm[n]);
          }
          ReportRow row = fb;
          row.time = run.times[n];
          row.metric = l2 ? "rel_l2_torso" : "rel_l1_boundary";
          row.value = v;
          rep.rows.push_back(std::move(row));
        }
      }
      ReportRow mx = fb;
      mx.metric = "max_rel_l2_torso";
      mx.value = finite_or_empty(time_max(per_time));
      rep.rows.push_back(mx);
      mx.metric = "rel_l2_torso_spacetime";
      mx.value = finite_or_empty(spacetime_l2(per_time, per_time_ref));
      rep.rows.push_back(std::move(mx));
      ReportRow st = fb;
      st.metric = "rel_l1_spacetime_boundary";
      if (!failed && ref_spacetime > 0.0) st.value = acc / ref_spacetime;
      (form == 0 ? f1_st : f2_st)[f] = st.value;
      rep.rows.push_back(std::move(st));
    }
    ReportRow vb = base;
    vb.formulation = "vtilde";
    for (std::size_t w = 0; w < nw; ++w) {
      const std::size_t n = window[w];
      if (!ctx.significant(n)) continue;
      ReportRow row = vb;
      row.time = run.times[n];
      row.metric = "rel_l2_heart";
      row.value = cells[f * nw + w].vtilde_rel_l2_heart;
      rep.rows.push_back(std::move(row));
    }
  }

  for (int form = 0; form < 2; ++form) {
    const auto& st = form == 0 ? f1_st : f2_st;
    ReportRow row;
    row.study = "sweep";
    row.formulation = form == 0 ? "F1" : "F2";
    row.front = "heaviside";
    row.metric = "eps0";
    std::optional<std::size_t> best;
    bool complete = !options.eps_grid.empty();
    for (std::size_t f = 0; f < options.eps_grid.size(); ++f) {
      if (!st[f]) {
        complete = false;
        break;
      }
      if (!best || *st[f] < *st[*best]) best = f;
    }
    if (complete && best) row.value = options.eps_grid[*best];
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

// ----------------------------------------------------------------- noise

std::string_view to_string(NoiseCase c) {
  switch (c) {
    case NoiseCase::VrefPlusW: return "VREF_PLUS_W";
    case NoiseCase::VepsPlusW: return "VEPS_PLUS_W";
    case NoiseCase::PsiFieldNoise: return "PSI_FIELD_NOISE";
    case NoiseCase::PsiScalarShift: return "PSI_SCALAR_SHIFT";
  }
  return "?";
}

NoiseCase parse_noise_case(std::string_view text) {
  for (auto c : {NoiseCase::VrefPlusW, NoiseCase::VepsPlusW, NoiseCase::PsiFieldNoise, NoiseCase::PsiScalarShift}) {
    if (to_string(c) == text) return c;
  }
  throw InvalidArgument(fmt::format("unknown noise case '{}'", text));
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw InvalidArgument("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

double noise_time_scale(const ExperimentContext& ctx, const ActivationMap& psi) {
  const double speed = mean_front_speed(*ctx.run->mesh, psi);
  return 2.0 * ctx.run->config.stimulus.radius / speed;
}

ExperimentReport noise_study(const ExperimentContext& ctx, const ActivationMap& psi, const NoiseOptions& o) {
  const BidomainRun& run = *ctx.run;
  if (o.realisations < 2) throw InvalidArgument("noise study needs at least 2 realisations");
  if (!(o.eps > 0.0)) throw InvalidArgument(fmt::format("epsilon must be > 0 (got {})", o.eps));
  for (double a : o.amplitudes) {
    if (!(a >= 0.0)) throw InvalidArgument(fmt::format("noise amplitude must be >= 0 (got {})", a));
  }
  const double steps_f = std::round(o.t_eval / run.dt());
  if (steps_f < 0.0 || steps_f >= static_cast<double>(run.steps())) {
    throw InvalidArgument(fmt::format("t_eval {} outside the run", o.t_eval));
  }
  const auto n = static_cast<std::size_t>(steps_f);
  const double t = run.times[n];
  const SmoothedHeaviside front{o.eps};
  const double time_scale = noise_time_scale(ctx, psi);
  const double volt_scale = kFrontPlateau;
  const auto heart = run.mesh->heart_vertices();
  const std::vector<double> veps = build_vtilde(front, psi.psi, t);

  auto error_of = [&](const std::vector<double>& vt) {
    const auto sol = solve_f2(ctx.ops, vt, ctx.solver);
    return relative_error(ctx.ops, ctx.ops.mass_torso, sol.u, run.u[n]);
  };

  const std::size_t nc = o.cases.size();
  const std::size_t na = o.amplitudes.size();
  const auto nk = static_cast<std::size_t>(o.realisations);

  std::vector<std::optional<double>> noiseless(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    noiseless[c] = guarded([&] { return error_of(o.cases[c] == NoiseCase::VrefPlusW ? run.v[n] : veps); });
  }

  // err[(k * nc + c) * na + a]
  std::vector<std::optional<double>> err(nk * nc * na);
  parallel_for(nk, ctx.threads, [&](std::size_t k) {
    std::mt19937_64 rng(realisation_seed(o.base_seed, k));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double z0 = normal(rng);
    std::vector<double> z(heart.size());
    for (double& x : z) x = normal(rng);

    std::vector<double> vt(run.mesh->num_vertices(), 0.0);
    std::vector<double> shifted(psi.psi);
    for (std::size_t c = 0; c < nc; ++c) {
      for (std::size_t a = 0; a < na; ++a) {
        const double amp = o.amplitudes[a];
        err[(k * nc + c) * na + a] = guarded([&] {
          switch (o.cases[c]) {
            case NoiseCase::VrefPlusW:
            case NoiseCase::VepsPlusW: {
              const auto& base = o.cases[c] == NoiseCase::VrefPlusW ? run.v[n] : veps;
              std::copy(base.begin(), base.end(), vt.begin());
              for (std::size_t i = 0; i < heart.size(); ++i) vt[heart[i]] += amp * volt_scale * z[i];
              return error_of(vt);
            }
            case NoiseCase::PsiFieldNoise:
            case NoiseCase::PsiScalarShift: {
              // psi - w so that the front reads H(t - psi + w).
              const bool field_noise = o.cases[c] == NoiseCase::PsiFieldNoise;
              for (std::size_t i = 0; i < heart.size(); ++i) {
                const double w = amp * time_scale * (field_noise ? z[i] : z0);
                shifted[heart[i]] = psi.psi[heart[i]] - w;
              }
              return error_of(build_vtilde(front, shifted, t));
            }
          }
          return std::numeric_limits<double>::quiet_NaN();
        });
      }
    }
  });

  ExperimentReport rep;
  for (std::size_t c = 0; c < nc; ++c) {
    ReportRow row;
    row.study = "noise";
    row.formulation = "F2";
    row.front = "heaviside";
    row.eps = o.eps;
    row.noise_case = to_string(o.cases[c]);
    row.time = t;
    row.metric = "noiseless_rel_l2_torso";
    row.value = noiseless[c];
    rep.rows.push_back(std::move(row));
  }
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t a = 0; a < na; ++a) {
      ReportRow base;
      base.study = "noise";
      base.formulation = "F2";
      base.front = "heaviside";
      base.eps = o.eps;
      base.noise_case = to_string(o.cases[c]);
      base.amplitude = o.amplitudes[a];
      base.time = t;
      std::vector<double> ok;
      for (std::size_t k = 0; k < nk; ++k) {
        ReportRow row = base;
        row.seed = realisation_seed(o.base_seed, k);
        row.metric = "rel_l2_torso";
        row.value = err[(k * nc + c) * na + a];
        if (row.value) ok.push_back(*row.value);
        rep.rows.push_back(std::move(row));
      }
      std::sort(ok.begin(), ok.end());
      const std::pair<const char*, double> qs[] = {{"min", 0.0}, {"q1", 0.25}, {"median", 0.5}, {"q3", 0.75},
                                                   {"max", 1.0}};
      for (const auto& [name, q] : qs) {
        ReportRow row = base;
        row.metric = name;
        if (!ok.empty()) row.value = quantile_sorted(ok, q);
        rep.rows.push_back(std::move(row));
      }
      ReportRow failed = base;
      failed.metric = "failed_count";
      failed.value = static_cast<double>(nk - ok.size());
      rep.rows.push_back(std::move(failed));
    }
  }
  ReportRow scale = {};
  scale.study = "noise";
  scale.metric = "time_scale";
  scale.value = time_scale;
  rep.rows.push_back(std::move(scale));
  return rep;
}

}  // namespace ecgfwd
