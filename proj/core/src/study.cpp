#include "wofem/study.hpp"

#include "wofem/errors.hpp"
#include "wofem/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace wofem {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// ∑ over nodes of f(node), summed per cell in parallel and then in cell order.
double node_sum(const WeightedQuadrature& q, const std::function<double(std::size_t, int)>& f) {
  const std::size_t nc = q.mesh->num_cells();
  std::vector<double> per_cell(nc, 0.0);
  parallel_for(nc, [&](std::size_t t) {
    double s = 0.0;
    for (std::size_t k = q.offset[t]; k < q.offset[t + 1]; ++k) s += f(k, static_cast<int>(t));
    per_cell[t] = s;
  });
  double total = 0.0;
  for (double v : per_cell) total += v;
  return total;
}

Weight snap_weight(const Weight& w, const SimplicialMesh& base) {
  if (w.kind() != WeightKind::RadialPower || w.alpha() == 0.0) return w;
  const Vec2 c = base.vertex(nearest_vertex(base, w.center()));
  return Weight::radial_power(c, w.alpha());
}

BallSampler study_sampler(const MeshFamily& f) {
  BallSampler s;
  s.box_lo = Vec2(f.box.x0, f.box.y0);
  s.box_hi = Vec2(f.box.x1, f.box.y1);
  s.n_balls = 100;
  s.radial_points = 16;
  s.angular_points = 32;
  return s;
}

double lower_index(const NFunction& phi) {
  if (auto pf = phi.power_form(); pf && pf->second == 0.0) return pf->first;
  return estimate_indices(phi).i_lower;
}

}  // namespace

std::vector<MeshPtr> build_levels(const MeshFamily& family) {
  if (family.levels < 1) throw DomainError("mesh family needs at least one level");
  if (family.base_n < 1) throw DomainError("mesh family base resolution must be positive");
  std::vector<MeshPtr> out;
  out.push_back(std::make_shared<const SimplicialMesh>(
      structured_rect(family.base_n, family.base_n, family.box, family.pattern)));
  for (int l = 1; l < family.levels; ++l) out.push_back(std::make_shared<const SimplicialMesh>(refine_uniform(*out.back())));
  return out;
}

StudyCase manufactured_equation_case(const std::string& name, const NFunction& phi, const Weight& w,
                                     const AnalyticField& u_ex, const MeshFamily& family) {
  const SimplicialMesh base = structured_rect(family.base_n, family.base_n, family.box, family.pattern);
  StudyCase c;
  c.name = name;
  c.kind = CaseKind::Equation;
  c.family = family;
  c.problem.phi = phi;
  c.problem.weight = snap_weight(w, base);
  c.problem.exact = u_ex;
  c.problem.rhs = RhsFunctional::exact_gradient(u_ex.gradient);
  c.sampler = study_sampler(family);
  return c;
}

StudyCase manufactured_obstacle_case(const std::string& name, const NFunction& phi, const Weight& w,
                                     const ObstacleConstruction& oc, const MeshFamily& family) {
  StudyCase c = manufactured_equation_case(name, phi, w, bump_field(oc.center, oc.radius, 3), family);
  c.kind = CaseKind::Obstacle;
  c.expected_eoc = 0.5;
  ObstacleData od;
  od.contact = oc.contact;
  if (oc.contact) {
    if (!(oc.r_contact > 0.0 && oc.r_contact < oc.radius)) throw DomainError("contact disk must lie inside the bump");
    od.eta = cubic_collar(oc.center, oc.r_contact);
    const double r2 = oc.r_contact * oc.r_contact;
    const double G = oc.g_scale;
    const Vec2 ctr = oc.center;
    od.multiplier_density = [=](const Vec2& x) {
      const double s = 1.0 - (x - ctr).squaredNorm() / r2;
      return s > 0.0 ? G * s * s : 0.0;
    };
  } else {
    if (!(oc.eta_offset > 0.0)) throw DomainError("no-contact construction needs a positive offset");
    od.eta = linear_field(oc.eta_offset, Vec2::Zero());
    od.multiplier_density = [](const Vec2&) { return 0.0; };
  }
  const AnalyticField u = *c.problem.exact;
  const AnalyticField eta = od.eta;
  c.problem.obstacle = [u, eta](const Vec2& x) { return u.value(x) - eta.value(x); };
  const ScalarField g = od.multiplier_density;
  c.problem.rhs.extra_load = [g](const Vec2& x) { return -g(x); };
  c.obstacle = std::move(od);
  return c;
}

std::vector<std::string> shipped_case_names() {
  return {"eq_p2_sine", "eq_p1.5_sine", "eq_p3_bump_weighted", "eq_p2_sine_analytic",
          "obs_p2", "obs_p2.5_weighted", "obs_p2_nocontact"};
}

StudyCase shipped_case(const std::string& name) {
  constexpr double pi = std::numbers::pi;
  const Weight one = Weight::constant(1.0);
  if (name == "eq_p2_sine") return manufactured_equation_case(name, make_power(2.0), one, sine_field());
  if (name == "eq_p1.5_sine") return manufactured_equation_case(name, make_power(1.5), one, sine_field());
  if (name == "eq_p3_bump_weighted") {
    return manufactured_equation_case(name, make_shifted_power(3.0, 0.1), Weight::radial_power({0.5, 0.5}, 0.5),
                                      bump_field({0.4, 0.45}, 0.35, 2));
  }
  if (name == "eq_p2_sine_analytic") {
    StudyCase c = manufactured_equation_case(name, make_power(2.0), one, sine_field());
    c.problem.rhs = RhsFunctional::analytic(
        [pi](const Vec2& x) { return 2.0 * pi * pi * std::sin(pi * x.x()) * std::sin(pi * x.y()); });
    return c;
  }
  if (name == "obs_p2") return manufactured_obstacle_case(name, make_power(2.0), one);
  if (name == "obs_p2.5_weighted") {
    return manufactured_obstacle_case(name, make_power(2.5), Weight::radial_power({0.375, 0.5}, 1.0 / 3.0));
  }
  if (name == "obs_p2_nocontact") {
    ObstacleConstruction oc;
    oc.contact = false;
    StudyCase c = manufactured_obstacle_case(name, make_power(2.0), one, oc);
    c.expected_eoc = 1.0;
    return c;
  }
  throw DomainError("unknown study case: " + name);
}

double quasinorm_error(const NFunction& phi, const WeightedQuadrature& q, const VectorField& grad_exact,
                       const FeFunction& u_h) {
  const double s = node_sum(q, [&](std::size_t k, int t) {
    const Vec2 d = vector_V(phi, grad_exact(q.x[k])) - vector_V(phi, u_h.gradient(t));
    return q.w[k] * q.omega[k] * d.squaredNorm();
  });
  return std::sqrt(s);
}

double quasinorm_error(const NFunction& phi, const Weight& w, const VectorField& grad_exact, const FeFunction& u_h,
                       int degree) {
  return quasinorm_error(phi, build_quadrature(u_h.mesh_ptr(), w, degree), grad_exact, u_h);
}

double regularity_integral(const NFunction& phi, const WeightedQuadrature& q, const AnalyticField& u) {
  return node_sum(q, [&](std::size_t k, int) {
    const Mat2 M = linearized_V(phi, u.gradient(q.x[k])) * u.hessian(q.x[k]);
    return q.w[k] * q.omega[k] * M.squaredNorm();
  });
}

WeightDiagnosticsReport weight_diagnostics(const StudyCase& c, const SimplicialMesh& base) {
  WeightDiagnosticsReport d;
  const Weight& w = c.problem.weight;
  d.weight = w.describe();
  d.phi = c.problem.phi.describe();
  const AphiResult a = is_A_Phi(w, c.problem.phi, c.sampler);
  d.a_phi = a.verdict;
  d.a_phi_direct = a.direct;
  d.a_phi_growth = a.direct_growth;
  d.ap_characteristic = a.indirect.characteristic;
  d.ap_growth = a.indirect.growth_flag;
  d.inconsistent = a.inconsistent;
  d.delta2 = a.delta2_ok;
  if (c.kind == CaseKind::Obstacle) {
    const ApOmegaResult r = is_A_p_Omega(w, base, lower_index(c.problem.phi), 0.1);
    d.collar_checked = true;
    d.collar_ok = r.verdict;
    d.collar_omega_lower = r.omega_lower_fine;
    d.collar_modulus = r.modulus_fine;
  }
  return d;
}

ConvergenceReport run_convergence(const StudyCase& c) {
  if (!c.problem.exact) throw DomainError("study case needs an exact solution");
  if (c.family.levels < 3) throw DomainError("a convergence study needs at least 3 levels");
  if (c.kind == CaseKind::Obstacle && (!c.obstacle || !c.problem.obstacle)) {
    throw DomainError("obstacle case without obstacle data");
  }
  const AnalyticField& ex = *c.problem.exact;
  const NFunction& phi = c.problem.phi;
  const std::vector<MeshPtr> meshes = build_levels(c.family);

  ConvergenceReport r;
  r.case_name = c.name;
  r.kind = c.kind == CaseKind::Equation ? "equation" : "obstacle";
  r.phi = phi.describe();
  r.weight = c.problem.weight.describe();
  r.solution = ex.name;
  r.pattern = to_string(c.family.pattern);
  r.base_n = c.family.base_n;
  r.quad_degree = c.quad_degree;
  r.expected_eoc = c.expected_eoc;
  r.eoc_tolerance = c.eoc_tolerance;
  r.boundary_condition = boundary_condition_check(*meshes.front());
  r.diagnostics = weight_diagnostics(c, *meshes.front());

  FeFunction previous;
  for (int l = 0; l < c.family.levels; ++l) {
    const MeshPtr& mesh = meshes[l];
    const Discretization disc(mesh, phi, c.problem.weight, c.problem.rhs, c.quad_degree);
    const WeightedQuadrature& q = disc.quadrature();
    std::optional<FeFunction> init;
    if (l > 0) init = prolongate(previous, mesh);

    LevelResult lr;
    lr.level = l;
    const ShapeMetrics sm = shape_metrics(*mesh);
    lr.h = sm.h_max;
    lr.sigma_max = sm.sigma_max;
    lr.dofs = static_cast<long>(mesh->num_dofs());
    lr.cells = static_cast<long>(mesh->num_cells());

    FeFunction u;
    SolveReport rep;
    if (c.kind == CaseKind::Equation) {
      EquationSolution sol = solve_equation(disc, c.solver, init ? &*init : nullptr);
      const VectorX res = disc.residual(sol.u);
      lr.orthogonality = res.size() ? res.cwiseAbs().maxCoeff() : 0.0;
      u = std::move(sol.u);
      rep = std::move(sol.report);
    } else {
      const ObstacleData& od = *c.obstacle;
      for (std::size_t k = 0; k < q.size(); ++k) {
        if (od.eta.value(q.x[k]) < 0.0) throw DomainError("obstacle construction violates u_ex >= psi");
      }
      const FeFunction lower = PpInterpolant(mesh).apply(*c.problem.obstacle);
      ObstacleSolution sol = solve_obstacle(disc, lower, c.solver, init ? &*init : nullptr);
      std::vector<char> is_active(mesh->num_vertices(), 0);
      for (int v : sol.active) is_active[v] = 1;
      const auto& iv = mesh->interior_vertices();
      for (std::size_t i = 0; i < iv.size(); ++i) {
        if (!is_active[iv[i]]) lr.orthogonality = std::max(lr.orthogonality, std::abs(sol.multiplier[i]));
      }
      lr.active = static_cast<long>(sol.active.size());
      lr.feasibility = sol.feasibility;
      lr.complementarity = sol.complementarity;
      lr.multiplier_min = sol.multiplier_min;
      u = std::move(sol.u);
      rep = std::move(sol.report);
    }
    lr.converged = rep.converged;
    lr.solver_iters = rep.iterations;
    lr.final_residual = rep.final_residual;

    lr.quasinorm_error = quasinorm_error(phi, q, ex.gradient, u);
    lr.weighted_l2_error = std::sqrt(node_sum(q, [&](std::size_t k, int t) {
      const double d = ex.value(q.x[k]) - u.value(t, q.bary[k]);
      return q.w[k] * q.omega[k] * d * d;
    }));
    // J(u_ex) = ∫ ω Φ(|∇u_ex|) - L(u_ex), with L evaluated by quadrature.
    const RhsFunctional& rhs = c.problem.rhs;
    const double j_exact = node_sum(q, [&](std::size_t k, int) {
      const Vec2 g = ex.gradient(q.x[k]);
      const double uv = ex.value(q.x[k]);
      double lval = rhs.mode == RhsMode::ExactGradient ? q.omega[k] * vector_A(phi, rhs.grad_u(q.x[k])).dot(g)
                                                       : q.omega[k] * rhs.f(q.x[k]) * uv;
      if (rhs.extra_load) lval += rhs.extra_load(q.x[k]) * uv;
      return q.w[k] * (q.omega[k] * phi(g.norm()) - lval);
    });
    lr.energy_gap = disc.energy(u) - j_exact;
    const FeFunction pi_u = SzOperator(mesh).apply(ex.value, true);
    lr.interpolation_error = quasinorm_error(phi, q, ex.gradient, pi_u);
    lr.c_ba = lr.interpolation_error > 0.0 ? lr.quasinorm_error / lr.interpolation_error : kNaN;
    lr.regularity = regularity_integral(phi, q, ex);
    lr.eoc = kNaN;
    if (l > 0) {
      const LevelResult& prev = r.levels.back();
      lr.eoc = std::log(prev.quasinorm_error / lr.quasinorm_error) / std::log(prev.h / lr.h);
    }

    if (c.kind == CaseKind::Obstacle && l + 1 == c.family.levels) {
      const ObstacleData& od = *c.obstacle;
      r.diagnostics.lambda_weighted_l2 = std::sqrt(node_sum(q, [&](std::size_t k, int) {
        const double g = od.multiplier_density(q.x[k]);
        return g == 0.0 ? 0.0 : q.w[k] * g * g / q.omega[k];
      }));
      r.diagnostics.grad_u_minus_psi = std::sqrt(node_sum(q, [&](std::size_t k, int) {
        return q.w[k] * q.omega[k] * od.eta.gradient(q.x[k]).squaredNorm();
      }));
    }

    r.levels.push_back(lr);
    if (!rep.converged) {
      r.failure = "level " + std::to_string(l) + ": " + rep.message;
      break;
    }
    previous = std::move(u);
  }

  r.complete = r.failure.empty() && static_cast<int>(r.levels.size()) == c.family.levels;
  const std::size_t n = r.levels.size();
  if (n >= 2) {
    const double a = r.levels[n - 2].regularity, b = r.levels[n - 1].regularity;
    r.regularity_stable = std::isfinite(a) && std::isfinite(b) && std::abs(b - a) <= 0.1 * std::max(a, b);
    r.last_eoc = r.levels.back().eoc;
  } else {
    r.last_eoc = kNaN;
  }
  r.rate_guaranteed = r.regularity_stable;
  double cmin = std::numeric_limits<double>::infinity(), cmax = 0.0;
  for (const LevelResult& lr : r.levels) {
    if (!std::isfinite(lr.c_ba)) continue;
    cmin = std::min(cmin, lr.c_ba);
    cmax = std::max(cmax, lr.c_ba);
  }
  r.c_ba_spread = cmax > 0.0 ? cmax / cmin : kNaN;
  r.observed_rate_one = std::isfinite(r.last_eoc) && std::abs(r.last_eoc - 1.0) <= c.eoc_tolerance;
  return r;
}

}  // namespace wofem
