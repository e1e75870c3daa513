#include "ecgfwd/bidomain.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "ecgfwd/errors.hpp"
#include "ecgfwd/kernels.hpp"

namespace ecgfwd {

void BidomainConfig::validate() const {
  if (!mesh) throw InvalidArgument("bidomain: no mesh");
  conductivity.validate();
  ionic.validate();
  if (!(dt > 0.0)) throw InvalidArgument(fmt::format("dt must be > 0 (got {})", dt));
  if (!(T >= dt)) throw InvalidArgument(fmt::format("T must be >= dt (got T={}, dt={})", T, dt));
  if (!(stimulus.radius > 0.0)) throw InvalidArgument("stimulus radius must be > 0");
  if (!(stimulus.pulse.half_width > 0.0)) throw InvalidArgument("stimulus width must be > 0");
  if (!(solver_tol > 0.0)) throw InvalidArgument("solver tolerance must be > 0");
  bool inside = false;
  for (std::size_t t = 0; t < mesh->num_triangles() && !inside; ++t) {
    const auto& tri = mesh->triangles()[t];
    if (tri.region != Region::Heart) continue;
    const Vec2 a = mesh->vertices()[tri.v[0]];
    const Vec2 b = mesh->vertices()[tri.v[1]];
    const Vec2 c = mesh->vertices()[tri.v[2]];
    const Vec2 p = stimulus.center;
    auto side = [](Vec2 o, Vec2 q, Vec2 r) { return (q.x - o.x) * (r.y - o.y) - (r.x - o.x) * (q.y - o.y); };
    inside = side(a, b, p) >= 0.0 && side(b, c, p) >= 0.0 && side(c, a, p) >= 0.0;
  }
  if (!inside) throw InvalidArgument("stimulus center must lie inside the heart");
}

OperatorSet build_operators(const TriMesh& mesh, const ConductivityMap& s) {
  s.validate();
  return {assemble_stiffness(mesh, {s.sigma_i, 0.0}),
          assemble_stiffness(mesh, {s.sigma_i + s.sigma_e, s.sigma_t}),
          assemble_stiffness(mesh, {s.sigma_e, s.sigma_t}),
          lumped_mass(mesh, MassSupport::Heart),
          lumped_mass(mesh, MassSupport::Torso),
          lumped_mass(mesh, MassSupport::All),
          lumped_mass(mesh, MassSupport::OuterBoundary)};
}

std::vector<double> BidomainRun::intracellular(std::size_t step) const {
  std::vector<double> ui(mesh->num_vertices(), 0.0);
  for (std::int32_t g : mesh->heart_vertices()) ui[g] = v[step][g] + u[step][g];
  return ui;
}

std::vector<double> stimulus_mask(const TriMesh& mesh, const Stimulus& stim) {
  std::vector<double> mask(mesh.num_vertices(), 0.0);
  const auto verts = mesh.vertices();
  for (std::int32_t g : mesh.heart_vertices()) {
    const double dx = verts[g].x - stim.center.x;
    const double dy = verts[g].y - stim.center.y;
    if (dx * dx + dy * dy <= stim.radius * stim.radius) mask[g] = 1.0;
  }
  return mask;
}

namespace {

// Coupled matrix over [v on heart vertices | u on all vertices]:
//   [ c M_H + K_i   K_i ]
//   [ K_i           K_b ]
CsrMatrix coupled_matrix(const TriMesh& mesh, const OperatorSet& ops, double c) {
  const auto heart = mesh.heart_vertices();
  const auto nh = static_cast<std::int32_t>(heart.size());
  const auto n = static_cast<std::int32_t>(mesh.num_vertices());
  std::vector<Triplet> trips;
  const CsrMatrix& ki = ops.intra.matrix;
  const CsrMatrix& kb = ops.balance.matrix;
  trips.reserve(4 * ki.nnz() + kb.nnz() + heart.size());
  for (std::int32_t a = 0; a < nh; ++a) {
    const std::int32_t g = heart[a];
    trips.push_back({a, a, c * ops.mass_heart.diag[g]});
    for (std::int32_t k = ki.row_ptr()[g]; k < ki.row_ptr()[g + 1]; ++k) {
      const std::int32_t gc = ki.col_index()[k];
      const double val = ki.values()[k];
      const std::int32_t b = mesh.heart_index(gc);
      trips.push_back({a, b, val});
      trips.push_back({a, nh + gc, val});
      trips.push_back({nh + g, b, val});
    }
  }
  for (std::int32_t g = 0; g < n; ++g) {
    for (std::int32_t k = kb.row_ptr()[g]; k < kb.row_ptr()[g + 1]; ++k) {
      trips.push_back({nh + g, nh + kb.col_index()[k], kb.values()[k]});
    }
  }
  return CsrMatrix::from_triplets(nh + n, nh + n, std::move(trips));
}

}  // namespace

BidomainRun run_bidomain(const BidomainConfig& config) {
  config.validate();
  const TriMesh& mesh = *config.mesh;
  const OperatorSet ops = build_operators(mesh, config.conductivity);
  const auto heart = mesh.heart_vertices();
  const std::size_t nh = heart.size();
  const std::size_t n = mesh.num_vertices();
  const double dt = config.dt;
  const auto steps = static_cast<std::size_t>(std::llround(config.T / dt));
  const MSParams& p = config.ionic;
  const auto& kern = kernels::active();

  const CsrMatrix first_order = coupled_matrix(mesh, ops, 1.0 / dt);
  const CsrMatrix second_order = coupled_matrix(mesh, ops, 1.5 / dt);
  const int max_iter = config.max_iter_factor * static_cast<int>(nh + n);

  std::vector<double> null_mask(nh + n, 0.0);
  std::fill(null_mask.begin() + static_cast<std::ptrdiff_t>(nh), null_mask.end(), 1.0);

  std::vector<double> mh(nh), stim_local(nh);
  const std::vector<double> stim_mask = stimulus_mask(mesh, config.stimulus);
  for (std::size_t a = 0; a < nh; ++a) {
    mh[a] = ops.mass_heart.diag[heart[a]];
    stim_local[a] = stim_mask[heart[a]];
  }

  BidomainRun run;
  run.mesh = config.mesh;
  run.config = config;
  run.times.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) run.times.push_back(static_cast<double>(k) * dt);

  auto to_full = [&](const std::vector<double>& local) {
    std::vector<double> full(n, 0.0);
    for (std::size_t a = 0; a < nh; ++a) full[heart[a]] = local[a];
    return full;
  };

  // Heart-local state history (index 0 = most recent).
  std::vector<double> v_prev(nh, 0.0), v_prev2(nh, 0.0);
  std::vector<double> h_prev(nh, 1.0), h_prev2(nh, 1.0);
  std::vector<double> ion_prev(nh), ion_prev2(nh);
  std::vector<double> gate_prev(nh), gate_prev2(nh);
  std::vector<double> x_prev(nh + n, 0.0), x_prev2(nh + n, 0.0);

  auto ionic = [&](const std::vector<double>& v, const std::vector<double>& h, std::vector<double>& out) {
    kern.ms_current(v, h, p.tau_in, p.tau_out, out);
    for (double& o : out) o = -o;
  };
  auto gate_rate = [&](const std::vector<double>& v, const std::vector<double>& h, std::vector<double>& out) {
    for (std::size_t a = 0; a < nh; ++a) out[a] = ms_rhs(v[a], h[a], p).dh;
  };

  run.v.push_back(std::vector<double>(n, 0.0));
  run.u.push_back(std::vector<double>(n, 0.0));
  run.h.push_back(to_full(h_prev));
  run.recorded_rhs.push_back(std::vector<double>(n, 0.0));
  run.recorded_reaction.push_back(std::vector<double>(n, 0.0));
  run.iterations.push_back(0);
  ionic(v_prev, h_prev, ion_prev);
  gate_rate(v_prev, h_prev, gate_prev);

  std::vector<double> rhs(nh + n, 0.0), x(nh + n, 0.0);
  std::vector<double> reaction(nh), v_new(nh), h_new(nh), recorded(nh);

  for (std::size_t step = 1; step <= steps; ++step) {
    const double t = run.times[step];
    const double pulse = config.stimulus.pulse(t);
    const bool bootstrap = step == 1;

    for (std::size_t a = 0; a < nh; ++a) {
      const double extrap = bootstrap ? ion_prev[a] : 2.0 * ion_prev[a] - ion_prev2[a];
      reaction[a] = extrap - stim_local[a] * pulse;
      const double history = bootstrap ? v_prev[a] / dt : (2.0 * v_prev[a] - 0.5 * v_prev2[a]) / dt;
      rhs[a] = mh[a] * (history - reaction[a]);
    }
    std::fill(rhs.begin() + static_cast<std::ptrdiff_t>(nh), rhs.end(), 0.0);
    if (kern.dot(rhs, null_mask) != 0.0) {
      throw Error(fmt::format("bidomain step {}: right-hand side not orthogonal to the constant mode", step));
    }

    for (std::size_t i = 0; i < nh + n; ++i) {
      x[i] = bootstrap ? x_prev[i] : 2.0 * x_prev[i] - x_prev2[i];
    }
    SolveStats stats;
    try {
      stats = pcg_singular(bootstrap ? first_order : second_order, rhs, x, null_mask,
                           config.solver_tol, max_iter);
    } catch (const SolverError& e) {
      throw SolverError(fmt::format("bidomain step {} (t = {}): {}", step, t, e.what()), e.residual());
    }

    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nh), v_new.begin());
    std::vector<double> u(x.begin() + static_cast<std::ptrdiff_t>(nh), x.end());
    u = remove_weighted_mean(u, ops.mass_all.diag);
    std::copy(u.begin(), u.end(), x.begin() + static_cast<std::ptrdiff_t>(nh));

    double vmax = 0.0;
    for (std::size_t a = 0; a < nh; ++a) {
      vmax = std::max(vmax, std::abs(v_new[a]));
      const double deriv = bootstrap ? (v_new[a] - v_prev[a]) / dt
                                     : (1.5 * v_new[a] - 2.0 * v_prev[a] + 0.5 * v_prev2[a]) / dt;
      recorded[a] = deriv + reaction[a];
    }
    if (!(vmax <= 10.0)) {
      throw Error(fmt::format("bidomain blow-up at step {} (t = {}): max |v| = {}", step, t, vmax));
    }

    for (std::size_t a = 0; a < nh; ++a) {
      const double hn = bootstrap ? h_prev[a] + dt * gate_prev[a]
                                  : (4.0 * h_prev[a] - h_prev2[a]) / 3.0 +
                                        (2.0 * dt / 3.0) * (2.0 * gate_prev[a] - gate_prev2[a]);
      h_new[a] = std::clamp(hn, 0.0, 1.0);
    }

    run.v.push_back(to_full(v_new));
    run.u.push_back(std::move(u));
    run.h.push_back(to_full(h_new));
    run.recorded_rhs.push_back(to_full(recorded));
    run.recorded_reaction.push_back(to_full(reaction));
    run.iterations.push_back(stats.iterations);

    v_prev2.swap(v_prev);
    v_prev = v_new;
    h_prev2.swap(h_prev);
    h_prev = h_new;
    ion_prev2.swap(ion_prev);
    gate_prev2.swap(gate_prev);
    ionic(v_prev, h_prev, ion_prev);
    gate_rate(v_prev, h_prev, gate_prev);
    x_prev2.swap(x_prev);
    x_prev = x;
  }
  return run;
}

}  // namespace ecgfwd
