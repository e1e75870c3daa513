#include "cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <optional>
#include <sstream>

#include "ecgfwd/activation.hpp"
#include "ecgfwd/bidomain.hpp"
#include "ecgfwd/config.hpp"
#include "ecgfwd/errors.hpp"
#include "ecgfwd/experiments.hpp"
#include "ecgfwd/fields_io.hpp"
#include "ecgfwd/formulations.hpp"
#include "ecgfwd/fronts.hpp"
#include "ecgfwd/ionic.hpp"
#include "ecgfwd/mesh.hpp"
#include "ecgfwd/parallel.hpp"

namespace fs = std::filesystem;

namespace ecgfwd {
namespace {

struct Globals {
  std::string config;
  std::string run_dir;
  std::uint64_t seed = 42;
  bool force = false;
  int threads = 1;
};

struct Source {
  RunConfig config;
  std::shared_ptr<const TriMesh> mesh;
  BidomainRun run;
};

RunConfig config_or_default(const Globals& g) { return g.config.empty() ? RunConfig{} : load_config(g.config); }

void echo_config(std::ostream& out, const RunConfig& c) {
  out << "# effective configuration\n" << format_config(c);
}

// The reference run comes from --run-dir when given, otherwise it is
// computed in-process from --config.
Source obtain_run(const Globals& g, std::ostream& out) {
  Source s;
  if (!g.run_dir.empty()) {
    LoadedRun l = load_run(g.run_dir);
    s.config = std::move(l.config);
    s.mesh = std::move(l.mesh);
    s.run = std::move(l.run);
  } else {
    if (g.config.empty()) throw InvalidArgument("need --config or --run-dir");
    s.config = load_config(g.config);
    s.mesh = make_mesh(s.config, fs::path(g.config).parent_path());
    s.run = run_bidomain(make_bidomain_config(s.config, s.mesh));
  }
  echo_config(out, s.config);
  return s;
}

ActivationMap activation_of(const Source& s, int threads) {
  return compute_activation(*s.mesh, s.run.times, s.run.v, 0.5, threads);
}

std::vector<double> split_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || tok.empty()) throw InvalidArgument(fmt::format("bad number '{}' in '{}'", tok, text));
    out.push_back(v);
  }
  return out;
}

// Steps at which a recipe has every snapshot it needs.
std::pair<std::size_t, std::size_t> recipe_steps(const RhsRecipe& r, std::size_t steps) {
  switch (r.derivative) {
    case DerivativeScheme::Sbdf2: return {2, steps};
    case DerivativeScheme::EulerCentered: return {1, steps - 1};
    case DerivativeScheme::EulerExplicit:
    case DerivativeScheme::Recorded: return {1, steps};
    case DerivativeScheme::Analytic: return {0, steps};
  }
  return {0, 0};
}

void write_report(const ExperimentReport& rep, const std::string& path, bool force, std::ostream& out) {
  write_output(path, rep.to_csv(), force);
  out << fmt::format("wrote {} rows to {}\n", rep.rows.size(), path);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Forward ECG toolkit: bidomain reference runs, source and balance formulations, studies"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Configuration file");
  app.add_option("--run-dir", g.run_dir, "Directory written by run-bidomain");
  app.add_option("--seed", g.seed, "Base seed");
  app.add_flag("--force", g.force, "Overwrite existing outputs");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);

  // mesh-gen
  auto* mesh_gen = app.add_subcommand("mesh-gen", "Generate a disk-in-disk mesh");
  std::optional<double> r_heart, r_torso;
  std::optional<int> rings, sectors;
  std::string mesh_out;
  mesh_gen->add_option("--r-heart", r_heart);
  mesh_gen->add_option("--r-torso", r_torso);
  mesh_gen->add_option("--rings", rings);
  mesh_gen->add_option("--sectors", sectors);
  mesh_gen->add_option("--out", mesh_out)->required();

  // ms0d
  auto* ms0d = app.add_subcommand("ms0d", "Single-cell action potential trace");
  double ms_dt = 0.01;
  double ms_T = 330.0;
  std::string ms_out;
  ms0d->add_option("--dt", ms_dt);
  ms0d->add_option("--T", ms_T);
  ms0d->add_option("--out", ms_out)->required();

  // run-bidomain
  auto* bido = app.add_subcommand("run-bidomain", "Reference bidomain run");
  std::string out_dir;
  bido->add_option("--out-dir", out_dir)->required();

  // activation
  auto* act = app.add_subcommand("activation", "Activation map from fields_v.csv");
  std::string act_v, act_mesh, act_out;
  double act_threshold = 0.5;
  act->add_option("--v", act_v)->required();
  act->add_option("--mesh", act_mesh, "Mesh file (default: mesh.txt next to --v)");
  act->add_option("--threshold", act_threshold);
  act->add_option("--out", act_out)->required();

  // solve-f1
  auto* f1 = app.add_subcommand("solve-f1", "Source formulation on the reference run");
  std::string f1_recipe = "recorded";
  std::string f1_out;
  f1->add_option("--recipe", f1_recipe);
  f1->add_option("--out", f1_out)->required();

  // solve-f2
  auto* f2 = app.add_subcommand("solve-f2", "Balance formulation on the reference run");
  std::string f2_front;
  std::optional<double> f2_eps;
  std::string f2_out;
  f2->add_option("--front", f2_front, "vref, heaviside or ms0d (default: the config front)");
  f2->add_option("--eps", f2_eps);
  f2->add_option("--out", f2_out)->required();

  // verify
  auto* verify = app.add_subcommand("verify", "Verification study");
  std::string verify_out;
  verify->add_option("--out", verify_out)->required();

  // sweep-eps
  auto* sweep = app.add_subcommand("sweep-eps", "Front-width sweep");
  std::string sweep_grid = "0.5:5:0.5";
  bool sweep_no_ms0d = false;
  std::string sweep_out;
  sweep->add_option("--eps", sweep_grid, "lo:hi:step");
  sweep->add_flag("--no-ms0d", sweep_no_ms0d);
  sweep->add_option("--out", sweep_out)->required();

  // noise-study
  auto* noise = app.add_subcommand("noise-study", "Noise sensitivity of the balance formulation");
  NoiseOptions nopt;
  std::string noise_amps = "0.01,0.05,0.1";
  std::string noise_cases;
  std::string noise_out;
  noise->add_option("--eps", nopt.eps);
  noise->add_option("--n", nopt.realisations);
  noise->add_option("--t", nopt.t_eval);
  noise->add_option("--amplitudes", noise_amps, "Comma-separated fractions");
  noise->add_option("--cases", noise_cases, "Comma-separated subset of the four cases");
  noise->add_option("--out", noise_out)->required();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  try {
    // Refuse before computing anything.
    const std::pair<CLI::App*, const std::string*> outputs[] = {
        {mesh_gen, &mesh_out}, {ms0d, &ms_out},       {act, &act_out},    {f1, &f1_out},
        {f2, &f2_out},         {verify, &verify_out}, {sweep, &sweep_out}, {noise, &noise_out}};
    for (const auto& [cmd, path] : outputs) {
      if (*cmd) ensure_writable(*path, g.force);
    }
    if (*bido) ensure_run_writable(out_dir, g.force);

    if (*mesh_gen) {
      RunConfig c = config_or_default(g);
      if (r_heart) c.mesh.r_heart = *r_heart;
      if (r_torso) c.mesh.r_torso = *r_torso;
      if (rings) c.mesh.rings = *rings;
      if (sectors) c.mesh.sectors = *sectors;
      const TriMesh mesh = generate_disk_in_disk(c.mesh);
      write_output(mesh_out, format_mesh(mesh), g.force);
      out << fmt::format("wrote mesh with {} vertices and {} triangles to {}\n", mesh.num_vertices(),
                         mesh.num_triangles(), mesh_out);
    } else if (*ms0d) {
      const RunConfig c = config_or_default(g);
      const Trace0D tr = solve_ms_0d(c.ionic, SmoothPulse{}, ms_dt, ms_T);
      fmt::memory_buffer buf;
      fmt::format_to(std::back_inserter(buf), "t,v,h\n");
      for (std::size_t k = 0; k < tr.t.size(); ++k) {
        fmt::format_to(std::back_inserter(buf), "{:.17g},{:.17g},{:.17g}\n", tr.t[k], tr.v[k], tr.h[k]);
      }
      write_output(ms_out, fmt::to_string(buf), g.force);
    } else if (*bido) {
      if (g.config.empty()) throw InvalidArgument("run-bidomain needs --config");
      const RunConfig c = load_config(g.config);
      echo_config(out, c);
      auto mesh = make_mesh(c, fs::path(g.config).parent_path());
      const BidomainRun run = run_bidomain(make_bidomain_config(c, mesh));
      save_run(run, c, out_dir, g.force);
      out << fmt::format("wrote {} steps to {}\n", run.steps(), out_dir);
    } else if (*act) {
      const fs::path mesh_path = act_mesh.empty() ? fs::path(act_v).parent_path() / RunFiles::kMesh : fs::path(act_mesh);
      const TriMesh mesh = load_mesh(mesh_path);
      const FieldTable v = read_field_csv(act_v);
      const auto series = expand_field_table(v, mesh.num_vertices());
      const ActivationMap map = compute_activation(mesh, v.times, series, act_threshold, g.threads);
      write_output(act_out, format_activation_csv(mesh, map), g.force);
      out << fmt::format("activated {} of {} heart vertices\n", map.count_activated(), mesh.heart_vertices().size());
    } else if (*f1) {
      const RhsRecipe recipe = RhsRecipe::parse(f1_recipe);
      const Source s = obtain_run(g, out);
      ExperimentContext ctx = ExperimentContext::make(s.run, make_solver_options(s.config), g.threads);
      const bool needs_fit = recipe.ionic == IonicChoice::FInt;
      const std::optional<CubicIonic> fit =
          needs_fit ? std::optional(fit_f_int(ctx, {10, g.seed})) : std::nullopt;
      std::optional<ActivationMap> psi;
      std::optional<FrontShape> front;
      if (recipe.derivative == DerivativeScheme::Analytic) {
        psi = activation_of(s, g.threads);
        front = make_front(s.config);
      }
      const auto [first, last] = recipe_steps(recipe, s.run.steps());
      std::vector<double> times(s.run.times.begin() + static_cast<std::ptrdiff_t>(first),
                                s.run.times.begin() + static_cast<std::ptrdiff_t>(last));
      std::vector<std::vector<double>> fields(last - first);
      parallel_for(fields.size(), g.threads, [&](std::size_t i) {
        const std::size_t n = first + i;
        const auto& run = s.run;
        const auto stim = ctx.stimulus_current(run.times[n]);
        std::vector<double> deriv;
        F1Data d;
        d.dt = run.dt();
        if (n >= 2) d.v_prev2 = run.v[n - 2];
        if (n >= 1) d.v_prev = run.v[n - 1];
        d.v_cur = run.v[n];
        if (n + 1 < run.steps()) d.v_next = run.v[n + 1];
        d.h_cur = run.h[n];
        d.recorded_rhs = run.recorded_rhs[n];
        d.recorded_reaction = run.recorded_reaction[n];
        d.stimulus = stim;
        d.heart_mask = ctx.heart_mask;
        d.ms = &run.config.ionic;
        d.f_int = fit;
        if (front) {
          deriv = build_vtilde_deriv(*front, psi->psi, run.times[n]);
          d.analytic_deriv = deriv;
        }
        fields[i] = solve_f1(ctx.ops, f1_rhs(d, recipe), ctx.solver).u;
      });
      std::vector<std::int32_t> all(s.mesh->num_vertices());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::int32_t>(i);
      write_output(f1_out, format_field_csv(make_field_table(times, fields, all)), g.force);
    } else if (*f2) {
      const Source s = obtain_run(g, out);
      const ExperimentContext ctx = ExperimentContext::make(s.run, make_solver_options(s.config), g.threads);
      RunConfig c = s.config;
      if (f2_front == "heaviside") c.front.kind = FrontSpec::Kind::Heaviside;
      else if (f2_front == "ms0d") c.front.kind = FrontSpec::Kind::Ms0d;
      else if (!f2_front.empty() && f2_front != "vref") throw InvalidArgument(fmt::format("unknown front '{}'", f2_front));
      if (f2_eps) c.front.epsilon = *f2_eps;
      c.validate();
      const bool use_vref = f2_front == "vref";
      std::optional<ActivationMap> psi;
      std::optional<FrontShape> front;
      if (!use_vref) {
        psi = activation_of(s, g.threads);
        front = make_front(c);
      }
      std::vector<std::vector<double>> fields(s.run.steps());
      parallel_for(fields.size(), g.threads, [&](std::size_t n) {
        const auto vt = use_vref ? s.run.v[n] : build_vtilde(*front, psi->psi, s.run.times[n]);
        fields[n] = solve_f2(ctx.ops, vt, ctx.solver).u;
      });
      std::vector<std::int32_t> all(s.mesh->num_vertices());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::int32_t>(i);
      write_output(f2_out, format_field_csv(make_field_table(s.run.times, fields, all)), g.force);
    } else if (*verify) {
      const Source s = obtain_run(g, out);
      const ExperimentContext ctx = ExperimentContext::make(s.run, make_solver_options(s.config), g.threads);
      const CubicIonic fit = fit_f_int(ctx, {10, g.seed});
      out << fmt::format("f_int: a = {:.17g}, r = {:.17g}\n", fit.a, fit.r);
      write_report(verification_study(ctx, default_verification_recipes(), fit), verify_out, g.force, out);
    } else if (*sweep) {
      SweepOptions so;
      so.eps_grid = parse_eps_grid(sweep_grid);
      so.include_ms0d = !sweep_no_ms0d;
      const Source s = obtain_run(g, out);
      const ExperimentContext ctx = ExperimentContext::make(s.run, make_solver_options(s.config), g.threads);
      const CubicIonic fit = fit_f_int(ctx, {10, g.seed});
      const ActivationMap psi = activation_of(s, g.threads);
      write_report(epsilon_sweep(ctx, psi, fit, so), sweep_out, g.force, out);
    } else if (*noise) {
      nopt.base_seed = g.seed;
      nopt.amplitudes = split_doubles(noise_amps);
      if (!noise_cases.empty()) {
        nopt.cases.clear();
        std::stringstream ss(noise_cases);
        std::string tok;
        while (std::getline(ss, tok, ',')) nopt.cases.push_back(parse_noise_case(tok));
      }
      const Source s = obtain_run(g, out);
      const ExperimentContext ctx = ExperimentContext::make(s.run, make_solver_options(s.config), g.threads);
      const ActivationMap psi = activation_of(s, g.threads);
      write_report(noise_study(ctx, psi, nopt), noise_out, g.force, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace ecgfwd
