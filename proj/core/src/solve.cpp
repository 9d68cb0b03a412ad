#include "wofem/solve.hpp"

#include "wofem/errors.hpp"
#include "wofem/interp.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace wofem {

namespace {

/// Interior dofs that are free to move (not pinned to the obstacle).
struct FreeSet {
  std::vector<int> dofs;
  std::vector<int> compact;  ///< dof -> position in dofs, or -1

  explicit FreeSet(const std::vector<char>& pinned) : compact(pinned.size(), -1) {
    for (std::size_t i = 0; i < pinned.size(); ++i) {
      if (!pinned[i]) {
        compact[i] = static_cast<int>(dofs.size());
        dofs.push_back(static_cast<int>(i));
      }
    }
  }
  VectorX restrict(const VectorX& full) const {
    VectorX r(dofs.size());
    for (std::size_t k = 0; k < dofs.size(); ++k) r[k] = full[dofs[k]];
    return r;
  }
  SpMat restrict(const SpMat& M) const {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(M.nonZeros());
    for (int col = 0; col < M.outerSize(); ++col) {
      const int cc = compact[col];
      if (cc < 0) continue;
      for (SpMat::InnerIterator it(M, col); it; ++it) {
        const int rr = compact[it.row()];
        if (rr >= 0) trip.emplace_back(rr, cc, it.value());
      }
    }
    const auto n = static_cast<Eigen::Index>(dofs.size());
    SpMat R(n, n);
    R.setFromTriplets(trip.begin(), trip.end());
    return R;
  }
};

double max_abs(const VectorX& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

bool solve_linear(const SpMat& A, const VectorX& b, VectorX& x) {
  Eigen::SimplicialLDLT<SpMat> ldlt(A);
  if (ldlt.info() == Eigen::Success) {
    x = ldlt.solve(b);
    if (ldlt.info() == Eigen::Success && x.allFinite()) return true;
  }
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) return false;
  x = lu.solve(b);
  return lu.info() == Eigen::Success && x.allFinite();
}

FeFunction with_step(const FeFunction& u, const FreeSet& fs, const VectorX& d, double t) {
  VectorX x = u.interior_values();
  for (std::size_t k = 0; k < fs.dofs.size(); ++k) x[fs.dofs[k]] += t * d[k];
  FeFunction out = u;
  out.set_interior_values(x);
  return out;
}

/// Backtracking on the energy. Steps whose energy change is at roundoff
/// level are accepted when they reduce the residual.
bool line_search(const Discretization& disc, const FeFunction& u, const FreeSet& fs, const VectorX& d,
                 const VectorX& r, double energy0, double rnorm, const SolverConfig& cfg, double& step) {
  const double slope = r.dot(d);
  const double scale = std::abs(energy0) + std::abs(disc.rhs_value(u)) + std::numeric_limits<double>::min();
  double t = 1.0;
  for (int k = 0; k < cfg.max_line_search; ++k, t *= cfg.contraction) {
    const FeFunction trial = with_step(u, fs, d, t);
    const double e = disc.energy(trial);
    if (!std::isfinite(e)) continue;
    if (e <= energy0 + cfg.armijo * t * slope) {
      step = t;
      return true;
    }
    if (std::abs(e - energy0) <= 1e-12 * scale) {
      const double rn = max_abs(fs.restrict(disc.residual(trial)));
      if (rn < rnorm) {
        step = t;
        return true;
      }
    }
  }
  return false;
}

/// Newton iterations on the free dofs; pinned dofs keep their values.
bool newton(const Discretization& disc, FeFunction& u, const std::vector<char>& pinned, const SolverConfig& cfg,
            SolveReport& rep, long active) {
  const FreeSet fs(pinned);
  std::optional<SpMat> stiffness;
  for (int it = 0; it <= cfg.max_iterations; ++it) {
    const VectorX r = fs.restrict(disc.residual(u));
    const double rnorm = max_abs(r);
    const double energy = disc.energy(u);
    rep.final_residual = rnorm;
    if (rnorm <= cfg.tol) {
      rep.log.push_back({rep.iterations, "converged", rnorm, energy, 0.0, active});
      return true;
    }
    if (it == cfg.max_iterations) break;
    ++rep.iterations;

    VectorX d;
    double step = 0.0;
    std::string kind = "newton";
    const SpMat M = fs.restrict(disc.newton_matrix(u, cfg.eps_reg));
    bool ok = solve_linear(M, -r, d) && r.dot(d) < 0.0 && line_search(disc, u, fs, d, r, energy, rnorm, cfg, step);
    if (!ok) {
      kind = "gradient";
      rep.used_fallback = true;
      if (!stiffness) stiffness = fs.restrict(disc.stiffness_matrix());
      ok = solve_linear(*stiffness, -r, d) && line_search(disc, u, fs, d, r, energy, rnorm, cfg, step);
    }
    if (!ok) {
      rep.log.push_back({rep.iterations, "stalled", rnorm, energy, 0.0, active});
      rep.message = "line search failed for both Newton and gradient-flow directions";
      return false;
    }
    u = with_step(u, fs, d, step);
    rep.log.push_back({rep.iterations, kind, rnorm, energy, step, active});
  }
  rep.message = "maximum number of iterations reached";
  return false;
}

/// Local 1D data at an interior vertex: residual and its derivative in u_v.
std::pair<double, double> local_residual(const Discretization& disc, const FeFunction& u, int v, double eps_reg) {
  const SimplicialMesh& m = disc.mesh();
  double r = -disc.load()[v];
  double dr = 0.0;
  for (int t : m.vertex_cells(v)) {
    const Cell& c = m.cell(t);
    int k = 0;
    while (c[k] != v) ++k;
    const Vec2& g = m.basis_gradients(t)[k];
    const Vec2 grad = u.gradient(t);
    const double om = disc.quadrature().cell_measure[t];
    r += om * vector_A(disc.phi(), grad).dot(g);
    dr += om * g.dot(linearized_A(disc.phi(), grad, eps_reg) * g);
  }
  return {r, dr};
}

/// Projected nonlinear Gauss–Seidel sweeps. Returns the projected residual.
double pgs(const Discretization& disc, FeFunction& u, const VectorX& lower, const SolverConfig& cfg, SolveReport& rep) {
  const SimplicialMesh& m = disc.mesh();
  const auto& iv = m.interior_vertices();
  VectorX vals = u.values();
  double worst = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < cfg.max_pgs_sweeps; ++sweep) {
    for (std::size_t d = 0; d < iv.size(); ++d) {
      const int v = iv[d];
      double x = vals[v];
      double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
      for (int k = 0; k < 50; ++k) {
        const auto [r, dr] = local_residual(disc, u, v, cfg.eps_reg);
        if (std::abs(r) <= 0.1 * cfg.tol) break;
        if (r > 0.0) hi = std::min(hi, x); else lo = std::max(lo, x);
        double nx = x - r / dr;
        if (!std::isfinite(nx) || nx <= lo || nx >= hi) {
          if (std::isfinite(lo) && std::isfinite(hi)) {
            nx = 0.5 * (lo + hi);
          } else {
            nx = x - std::copysign(std::max(1e-3, std::abs(x)), r);
          }
        }
        x = nx;
        VectorX tmp = u.values();
        tmp[v] = x;
        u.set_values(std::move(tmp));
        if (hi - lo <= 1e-15 * (1.0 + std::abs(x))) break;
      }
      x = std::max(x, lower[d]);
      vals = u.values();
      vals[v] = x;
      u.set_values(vals);
    }
    const VectorX r = disc.residual(u);
    worst = 0.0;
    for (std::size_t d = 0; d < iv.size(); ++d) {
      const bool at_bound = vals[iv[d]] <= lower[d];
      worst = std::max(worst, at_bound ? std::max(0.0, -r[d]) : std::abs(r[d]));
    }
    ++rep.iterations;
    rep.log.push_back({rep.iterations, "pgs", worst, disc.energy(u), 1.0, -1});
    if (worst <= cfg.tol) break;
  }
  return worst;
}

std::vector<char> active_set(const VectorX& lambda, const VectorX& u, const VectorX& g, const VectorX& c) {
  std::vector<char> a(lambda.size(), 0);
  for (Eigen::Index i = 0; i < lambda.size(); ++i) a[i] = lambda[i] + c[i] * (g[i] - u[i]) > 0.0;
  return a;
}

}  // namespace

EquationSolution solve_equation(const Discretization& disc, const SolverConfig& cfg, const FeFunction* initial) {
  if (!(cfg.tol > 0.0)) throw DomainError("solver tolerance must be positive");
  EquationSolution sol;
  sol.u = initial ? FeFunction(disc.mesh_ptr(), initial->values(), true) : FeFunction(disc.mesh_ptr(), true);
  const std::vector<char> pinned(disc.mesh().num_dofs(), 0);
  sol.report.converged = newton(disc, sol.u, pinned, cfg, sol.report, -1);
  if (sol.report.converged) sol.report.message = "converged";
  return sol;
}

VectorX discrete_multiplier(const Discretization& disc, const FeFunction& u) { return disc.residual(u); }

ObstacleSolution solve_obstacle(const Discretization& disc, const FeFunction& lower, const SolverConfig& cfg,
                                const FeFunction* initial) {
  if (!(cfg.tol > 0.0)) throw DomainError("solver tolerance must be positive");
  const SimplicialMesh& m = disc.mesh();
  const auto& iv = m.interior_vertices();
  const std::size_t n = iv.size();
  ObstacleSolution sol;
  sol.lower = lower;
  const VectorX g = lower.interior_values();

  VectorX x = initial ? initial->interior_values() : VectorX::Zero(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = initial ? std::max(x[i], g[i]) : std::max(0.0, g[i]);
  sol.u = FeFunction(disc.mesh_ptr(), true);
  sol.u.set_interior_values(x);

  const SpMat K = disc.stiffness_matrix();
  const VectorX c = K.diagonal();
  std::vector<char> active = active_set(disc.residual(sol.u), x, g, c);
  std::set<std::size_t> seen;
  auto hash = [](const std::vector<char>& a) { return std::hash<std::string>{}(std::string(a.begin(), a.end())); };
  seen.insert(hash(active));

  bool inner_ok = false;
  bool done = false;
  for (int cycle = 0; cycle < cfg.max_active_cycles && !done; ++cycle) {
    sol.report.active_cycles = cycle + 1;
    VectorX xv = sol.u.interior_values();
    long count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (active[i]) {
        xv[i] = g[i];
        ++count;
      }
    }
    sol.u.set_interior_values(xv);
    inner_ok = newton(disc, sol.u, active, cfg, sol.report, count);
    const VectorX lambda = disc.residual(sol.u);
    const std::vector<char> next = active_set(lambda, sol.u.interior_values(), g, c);
    sol.report.log.push_back({sol.report.iterations, "active_set", max_abs(lambda), disc.energy(sol.u), 0.0, count});
    if (next == active) {
      done = true;
      break;
    }
    if (!seen.insert(hash(next)).second) {
      // Cycling: fall back to projected Gauss–Seidel, then polish on its
      // active set.
      sol.report.used_fallback = true;
      pgs(disc, sol.u, g, cfg, sol.report);
      const VectorX r = disc.residual(sol.u);
      const VectorX xu = sol.u.interior_values();
      for (std::size_t i = 0; i < n; ++i) active[i] = xu[i] <= g[i] && r[i] > 0.0;
      inner_ok = newton(disc, sol.u, active, cfg, sol.report, -1);
      done = true;
      break;
    }
    active = next;
  }

  sol.multiplier = discrete_multiplier(disc, sol.u);
  const VectorX xu = sol.u.interior_values();
  sol.feasibility = 0.0;
  sol.complementarity = 0.0;
  sol.multiplier_min = n ? std::numeric_limits<double>::infinity() : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sol.feasibility = std::max(sol.feasibility, g[i] - xu[i]);
    sol.complementarity = std::max(sol.complementarity, std::abs(sol.multiplier[i] * (xu[i] - g[i])));
    sol.multiplier_min = std::min(sol.multiplier_min, sol.multiplier[i]);
    if (active[i]) sol.active.push_back(iv[i]);
  }
  sol.report.converged = done && inner_ok && sol.feasibility <= 1e-8 && sol.complementarity <= 1e-8 &&
                         sol.multiplier_min >= -cfg.tol;
  if (sol.report.converged) {
    sol.report.message = "converged";
  } else if (sol.report.message.empty()) {
    sol.report.message = done ? "KKT conditions not met" : "active set did not settle";
  }
  return sol;
}

EquationSolution solve_equation(const ProblemSpec& ps, MeshPtr mesh, const SolverConfig& cfg, int degree) {
  const Discretization disc(std::move(mesh), ps.phi, ps.weight, ps.rhs, degree);
  return solve_equation(disc, cfg);
}

ObstacleSolution solve_obstacle(const ProblemSpec& ps, MeshPtr mesh, const SolverConfig& cfg, int degree) {
  if (!ps.obstacle) throw DomainError("solve_obstacle: problem has no obstacle");
  const Discretization disc(mesh, ps.phi, ps.weight, ps.rhs, degree);
  const PpInterpolant pp(mesh);
  return solve_obstacle(disc, pp.apply(*ps.obstacle), cfg);
}

}  // namespace wofem
