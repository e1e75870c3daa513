#include "ecgfwd/operators.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numeric>

#include "ecgfwd/errors.hpp"
#include "ecgfwd/kernels.hpp"

namespace ecgfwd {

void ConductivityMap::validate() const {
  if (!(sigma_i >= 0.0)) throw InvalidArgument(fmt::format("sigma_i must be >= 0 (got {})", sigma_i));
  if (!(sigma_e > 0.0)) throw InvalidArgument(fmt::format("sigma_e must be > 0 (got {})", sigma_e));
  if (!(sigma_t > 0.0)) throw InvalidArgument(fmt::format("sigma_t must be > 0 (got {})", sigma_t));
}

StiffnessOperator assemble_stiffness(const TriMesh& mesh, RegionConductivity sigma) {
  if (sigma.heart < 0.0 || sigma.torso < 0.0 || std::isnan(sigma.heart) || std::isnan(sigma.torso)) {
    throw InvalidArgument(
        fmt::format("negative conductivity (heart {}, torso {})", sigma.heart, sigma.torso));
  }
  const std::size_t n = mesh.num_vertices();
  StiffnessOperator op;
  op.support.assign(n, 0);
  op.support_mass.assign(n, 0.0);

  std::vector<Triplet> trips;
  trips.reserve(mesh.num_triangles() * 9);
  const auto verts = mesh.vertices();
  const auto tris = mesh.triangles();
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const double s = tris[t].region == Region::Heart ? sigma.heart : sigma.torso;
    if (s == 0.0) continue;
    const auto& idx = tris[t].v;
    const double area = mesh.signed_area(t);
    double b[3];
    double c[3];
    for (int k = 0; k < 3; ++k) {
      const Vec2 p1 = verts[idx[(k + 1) % 3]];
      const Vec2 p2 = verts[idx[(k + 2) % 3]];
      b[k] = p1.y - p2.y;
      c[k] = p2.x - p1.x;
    }
    double local[3][3];
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        local[i][j] = local[j][i] = s * ((b[i] * b[j] + c[i] * c[j]) / (4.0 * area));
      }
    }
    // Diagonal as minus the off-diagonal sum keeps each local row sum at 0.
    for (int i = 0; i < 3; ++i) local[i][i] = -(local[i][(i + 1) % 3] + local[i][(i + 2) % 3]);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) trips.push_back({idx[i], idx[j], local[i][j]});
      op.support[idx[i]] = 1;
      op.support_mass[idx[i]] += area / 3.0;
    }
  }
  op.matrix = CsrMatrix::from_triplets(n, n, std::move(trips));
  return op;
}

double MassOperator::measure() const { return std::accumulate(diag.begin(), diag.end(), 0.0); }

MassOperator lumped_mass(const TriMesh& mesh, MassSupport support) {
  MassOperator m;
  m.support = support;
  m.diag.assign(mesh.num_vertices(), 0.0);
  if (support == MassSupport::OuterBoundary) {
    const auto verts = mesh.vertices();
    for (const auto& e : mesh.boundary_edges()) {
      const Vec2 a = verts[e.v[0]];
      const Vec2 b = verts[e.v[1]];
      const double len = std::hypot(b.x - a.x, b.y - a.y);
      m.diag[e.v[0]] += 0.5 * len;
      m.diag[e.v[1]] += 0.5 * len;
    }
    return m;
  }
  const auto tris = mesh.triangles();
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const bool take = support == MassSupport::All ||
                      (support == MassSupport::Heart && tris[t].region == Region::Heart) ||
                      (support == MassSupport::Torso && tris[t].region == Region::Torso);
    if (!take) continue;
    const double third = mesh.signed_area(t) / 3.0;
    for (std::int32_t i : tris[t].v) m.diag[i] += third;
  }
  return m;
}

namespace {

void project_out(std::span<double> z, std::span<const double> null_mask, double null_norm2) {
  if (null_norm2 == 0.0) return;
  const auto& k = kernels::active();
  const double coeff = k.dot(z, null_mask) / null_norm2;
  k.axpy(-coeff, null_mask, z);
}

}  // namespace

SolveStats pcg_singular(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                        std::span<const double> null_mask, double tol, int max_iter) {
  const std::size_t n = a.rows();
  if (b.size() != n || x.size() != n || (!null_mask.empty() && null_mask.size() != n)) {
    throw InvalidArgument("pcg: size mismatch");
  }
  const auto& k = kernels::active();
  const double null_norm2 = null_mask.empty() ? 0.0 : k.dot(null_mask, null_mask);

  std::vector<double> dinv = a.diagonal();
  for (std::size_t i = 0; i < n; ++i) {
    if (dinv[i] > 0.0) {
      dinv[i] = 1.0 / dinv[i];
    } else {
      if (b[i] != 0.0) throw InvalidArgument(fmt::format("pcg: nonzero rhs on empty row {}", i));
      dinv[i] = 0.0;
    }
  }

  const double bnorm = std::sqrt(k.dot(b, b));
  SolveStats stats;
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return stats;
  }

  std::vector<double> r(n), z(n), p(n), q(n);
  // The true residual is accumulated in extended precision so that restarts
  // act as iterative refinement below the double-precision residual floor.
  const auto rp = a.row_ptr();
  const auto ci = a.col_index();
  const auto av = a.values();
  auto true_residual = [&]() {
    for (std::size_t i = 0; i < n; ++i) {
      long double s = b[i];
      for (std::int32_t e = rp[i]; e < rp[i + 1]; ++e) {
        s -= static_cast<long double>(av[e]) * static_cast<long double>(x[ci[e]]);
      }
      r[i] = static_cast<double>(s);
    }
    return std::sqrt(k.dot(r, r));
  };

  double rnorm = true_residual();
  int it = 0;
  while (true) {
    if (rnorm <= tol * bnorm) {
      // Confirm with the true residual; restart the recurrence if it drifted.
      rnorm = true_residual();
      if (rnorm <= tol * bnorm) break;
    }
    if (it >= max_iter) {
      throw SolverError(fmt::format("conjugate gradients did not converge in {} iterations "
                                    "(relative residual {:.3e})",
                                    max_iter, rnorm / bnorm),
                        rnorm / bnorm);
    }
    k.scale_by(dinv, r, z);
    project_out(z, null_mask, null_norm2);
    std::copy(z.begin(), z.end(), p.begin());
    double rz = k.dot(r, z);
    while (it < max_iter) {
      ++it;
      a.multiply(p, q);
      const double pq = k.dot(p, q);
      if (!(pq > 0.0)) break;
      const double alpha = rz / pq;
      k.axpy(alpha, p, x);
      k.axpy(-alpha, q, r);
      rnorm = std::sqrt(k.dot(r, r));
      if (rnorm <= tol * bnorm) break;
      k.scale_by(dinv, r, z);
      project_out(z, null_mask, null_norm2);
      const double rz_new = k.dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      k.xpby(z, beta, p);
    }
    if (rnorm > tol * bnorm) rnorm = true_residual();
  }
  stats.iterations = it;
  stats.relative_residual = rnorm / bnorm;
  return stats;
}

double weighted_mean(std::span<const double> u, std::span<const double> mass) {
  const auto& k = kernels::active();
  double total = 0.0;
  for (double m : mass) total += m;
  if (total == 0.0) return 0.0;
  std::vector<double> ones(u.size(), 1.0);
  return k.weighted_dot(mass, u, ones) / total;
}

std::vector<double> remove_weighted_mean(std::span<const double> u, std::span<const double> mass) {
  if (u.size() != mass.size()) throw InvalidArgument("gauge: size mismatch");
  const double mean = weighted_mean(u, mass);
  std::vector<double> out(u.begin(), u.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mass[i] > 0.0) out[i] -= mean;
  }
  return out;
}

std::vector<double> solve_neumann(const StiffnessOperator& k, std::span<const double> rhs,
                                  const NeumannOptions& options, SolveStats* stats) {
  const std::size_t n = k.matrix.rows();
  if (rhs.size() != n) throw InvalidArgument("solve_neumann: rhs size mismatch");
  std::vector<double> b(rhs.begin(), rhs.end());
  std::vector<double> mask(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (k.support[i]) {
      mask[i] = 1.0;
    } else if (b[i] != 0.0) {
      throw InvalidArgument(fmt::format("solve_neumann: rhs nonzero off the operator support (vertex {})", i));
    }
  }
  if (options.enforce_compat) {
    double sum_b = 0.0;
    double sum_m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum_b += b[i];
      sum_m += k.support_mass[i];
    }
    if (sum_m > 0.0) {
      const double shift = sum_b / sum_m;
      for (std::size_t i = 0; i < n; ++i) b[i] -= shift * k.support_mass[i];
    }
  }
  std::vector<double> u(n, 0.0);
  const SolveStats s = pcg_singular(k.matrix, b, u, mask, options.tol,
                                    options.max_iter_factor * static_cast<int>(n));
  if (stats) *stats = s;
  return remove_weighted_mean(u, k.support_mass);
}

double l2_norm(const MassOperator& m, std::span<const double> u) {
  if (u.size() != m.size()) throw InvalidArgument("norm: field size does not match the mass operator");
  return std::sqrt(kernels::active().weighted_dot(m.diag, u, u));
}

double l1_norm(const MassOperator& m, std::span<const double> u) {
  if (u.size() != m.size()) throw InvalidArgument("norm: field size does not match the mass operator");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += m.diag[i] * std::abs(u[i]);
  return s;
}

}  // namespace ecgfwd
