#include "wofem/fe.hpp"

#include "wofem/errors.hpp"
#include "wofem/parallel.hpp"
#include "wofem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

namespace wofem {

FeFunction::FeFunction(MeshPtr mesh, bool boundary_constrained)
    : mesh_(std::move(mesh)), values_(VectorX::Zero(mesh_->num_vertices())), constrained_(boundary_constrained) {}

FeFunction::FeFunction(MeshPtr mesh, VectorX values, bool boundary_constrained)
    : mesh_(std::move(mesh)), constrained_(boundary_constrained) {
  set_values(std::move(values));
}

FeFunction FeFunction::interpolate(MeshPtr mesh, const ScalarField& f, bool boundary_constrained) {
  VectorX vals(mesh->num_vertices());
  for (std::size_t v = 0; v < mesh->num_vertices(); ++v) vals[v] = f(mesh->vertex(static_cast<int>(v)));
  return FeFunction(std::move(mesh), std::move(vals), boundary_constrained);
}

void FeFunction::set_values(VectorX values) {
  if (static_cast<std::size_t>(values.size()) != mesh_->num_vertices())
    throw DomainError("FeFunction: coefficient length differs from vertex count");
  values_ = std::move(values);
  if (constrained_) {
    for (std::size_t v = 0; v < mesh_->num_vertices(); ++v) {
      if (mesh_->is_boundary_vertex(static_cast<int>(v))) values_[v] = 0.0;
    }
  }
}

VectorX FeFunction::interior_values() const {
  const auto& iv = mesh_->interior_vertices();
  VectorX x(iv.size());
  for (std::size_t i = 0; i < iv.size(); ++i) x[i] = values_[iv[i]];
  return x;
}

void FeFunction::set_interior_values(const VectorX& x) {
  const auto& iv = mesh_->interior_vertices();
  if (static_cast<std::size_t>(x.size()) != iv.size()) throw DomainError("FeFunction: wrong interior length");
  for (std::size_t i = 0; i < iv.size(); ++i) values_[iv[i]] = x[i];
}

Vec2 FeFunction::gradient(int t) const {
  const Cell& c = mesh_->cell(t);
  const auto& g = mesh_->basis_gradients(t);
  return values_[c[0]] * g[0] + values_[c[1]] * g[1] + values_[c[2]] * g[2];
}

double FeFunction::value(int t, const std::array<double, 3>& bary) const {
  const Cell& c = mesh_->cell(t);
  return values_[c[0]] * bary[0] + values_[c[1]] * bary[1] + values_[c[2]] * bary[2];
}

FeFunction prolongate(const FeFunction& coarse, MeshPtr fine) {
  const auto& parents = fine->vertex_parents();
  if (parents.empty()) throw DomainError("prolongate: fine mesh carries no refinement history");
  VectorX vals(fine->num_vertices());
  for (std::size_t v = 0; v < fine->num_vertices(); ++v) {
    const Edge& p = parents[v];
    if (p[0] >= static_cast<int>(coarse.mesh().num_vertices()) || p[1] >= static_cast<int>(coarse.mesh().num_vertices()))
      throw DomainError("prolongate: meshes are not nested");
    vals[v] = p[0] == p[1] ? coarse[p[0]] : 0.5 * (coarse[p[0]] + coarse[p[1]]);
  }
  return FeFunction(std::move(fine), std::move(vals), coarse.boundary_constrained());
}

// ---------------------------------------------------------------------------

namespace {

using Ref = std::array<double, 2>;

bool contains(const Ref& a, const Ref& b, const Ref& c, const Ref& s) {
  const double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
  const double l1 = ((s[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (s[1] - a[1])) / det;
  const double l2 = ((b[0] - a[0]) * (s[1] - a[1]) - (s[0] - a[0]) * (b[1] - a[1])) / det;
  const double tol = -1e-12;
  return l1 >= tol && l2 >= tol && 1.0 - l1 - l2 >= tol;
}

struct SubTriangle {
  Ref a, b, c;
};

void subdivide(const SubTriangle& tri, const std::vector<Ref>& singular, int levels, std::vector<SubTriangle>& out) {
  bool hit = false;
  if (levels > 0) {
    for (const Ref& s : singular) hit = hit || contains(tri.a, tri.b, tri.c, s);
  }
  if (!hit) {
    out.push_back(tri);
    return;
  }
  auto mid = [](const Ref& p, const Ref& q) { return Ref{0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])}; };
  const Ref ab = mid(tri.a, tri.b), bc = mid(tri.b, tri.c), ca = mid(tri.c, tri.a);
  subdivide({tri.a, ab, ca}, singular, levels - 1, out);
  subdivide({ab, tri.b, bc}, singular, levels - 1, out);
  subdivide({ca, bc, tri.c}, singular, levels - 1, out);
  subdivide({ab, bc, ca}, singular, levels - 1, out);
}

}  // namespace

WeightedQuadrature build_quadrature(MeshPtr mesh, const Weight& weight, int degree, int subdivision_levels) {
  WeightedQuadrature q;
  q.mesh = mesh;
  q.weight = weight;
  q.degree = degree;
  const QuadratureRule rule = triangle_rule(degree);
  const auto singular = weight.singular_points();
  const std::size_t nc = mesh->num_cells();

  q.offset.assign(nc + 1, 0);
  q.x.reserve(nc * rule.size());
  q.bary.reserve(nc * rule.size());
  q.w.reserve(nc * rule.size());
  for (std::size_t t = 0; t < nc; ++t) {
    const int ti = static_cast<int>(t);
    q.offset[t] = q.x.size();
    const Cell& c = mesh->cell(ti);
    const Vec2& p0 = mesh->vertex(c[0]);
    const double jac = 2.0 * mesh->area(ti);

    std::vector<Ref> local;
    for (const Vec2& s : singular) {
      const auto& g = mesh->basis_gradients(ti);
      const double l1 = 1.0 + g[1].dot(s - mesh->vertex(c[1]));
      const double l2 = 1.0 + g[2].dot(s - mesh->vertex(c[2]));
      local.push_back({l1, l2});
    }
    std::vector<SubTriangle> subs;
    subdivide({{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}, local, local.empty() ? 0 : subdivision_levels, subs);

    for (const SubTriangle& st : subs) {
      const double sub_jac = std::abs((st.b[0] - st.a[0]) * (st.c[1] - st.a[1]) - (st.c[0] - st.a[0]) * (st.b[1] - st.a[1]));
      for (std::size_t k = 0; k < rule.size(); ++k) {
        const double xi = st.a[0] + rule.points[k][0] * (st.b[0] - st.a[0]) + rule.points[k][1] * (st.c[0] - st.a[0]);
        const double eta = st.a[1] + rule.points[k][0] * (st.b[1] - st.a[1]) + rule.points[k][1] * (st.c[1] - st.a[1]);
        q.x.push_back(p0 + xi * (mesh->vertex(c[1]) - p0) + eta * (mesh->vertex(c[2]) - p0));
        q.bary.push_back({1.0 - xi - eta, xi, eta});
        q.w.push_back(rule.weights[k] * sub_jac * jac);
      }
    }
  }
  q.offset[nc] = q.x.size();

  q.omega.resize(q.x.size());
  parallel_for(q.x.size(), [&](std::size_t i) { q.omega[i] = weight(q.x[i]); });
  q.cell_measure.assign(nc, 0.0);
  for (std::size_t t = 0; t < nc; ++t) {
    double s = 0.0;
    for (std::size_t i = q.offset[t]; i < q.offset[t + 1]; ++i) s += q.w[i] * q.omega[i];
    q.cell_measure[t] = s;
  }
  return q;
}

std::vector<double> sample_function(const WeightedQuadrature& q, const ScalarField& f) {
  std::vector<double> out(q.size());
  parallel_for(q.size(), [&](std::size_t i) { out[i] = f(q.x[i]); });
  return out;
}

std::vector<double> sample_values(const WeightedQuadrature& q, const FeFunction& v) {
  std::vector<double> out(q.size());
  const std::size_t nc = q.mesh->num_cells();
  for (std::size_t t = 0; t < nc; ++t) {
    for (std::size_t i = q.offset[t]; i < q.offset[t + 1]; ++i) out[i] = v.value(static_cast<int>(t), q.bary[i]);
  }
  return out;
}

std::vector<double> sample_gradient_norm(const WeightedQuadrature& q, const FeFunction& v) {
  std::vector<double> out(q.size());
  const std::size_t nc = q.mesh->num_cells();
  for (std::size_t t = 0; t < nc; ++t) {
    const double g = v.gradient(static_cast<int>(t)).norm();
    for (std::size_t i = q.offset[t]; i < q.offset[t + 1]; ++i) out[i] = g;
  }
  return out;
}

double modular(const NFunction& phi, const WeightedQuadrature& q, const std::vector<double>& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (g[i] != 0.0) s += q.w[i] * q.omega[i] * phi.phi(std::abs(g[i]));
  }
  return s;
}

double luxemburg_norm(const NFunction& phi, const WeightedQuadrature& q, const std::vector<double>& g,
                      double rel_tol) {
  double gmax = 0.0;
  for (double v : g) gmax = std::max(gmax, std::abs(v));
  if (gmax == 0.0) return 0.0;

  std::vector<double> scaled(g.size());
  auto mod = [&](double k) {
    for (std::size_t i = 0; i < g.size(); ++i) scaled[i] = g[i] / k;
    return modular(phi, q, scaled);
  };

  double hi = gmax;
  double m = mod(hi);
  int guard = 0;
  while (!(m <= 1.0)) {
    hi *= 2.0;
    m = mod(hi);
    if (++guard > 2000 || !std::isfinite(hi)) throw DivergenceError("luxemburg_norm: modular infinite at every scale");
  }
  double lo = hi;
  while (mod(lo) <= 1.0) {
    lo *= 0.5;
    if (lo < 1e-300) return 0.0;
  }
  // mod(lo) > 1 >= mod(hi)
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mod(mid) <= 1.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double lp_integral(const WeightedQuadrature& q, const std::vector<double>& g, double p, bool weighted) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double a = std::abs(g[i]);
    if (a == 0.0) continue;
    s += q.w[i] * (weighted ? q.omega[i] : 1.0) * (p == 1.0 ? a : p == 2.0 ? a * a : std::pow(a, p));
  }
  return s;
}

// ---------------------------------------------------------------------------

RhsFunctional RhsFunctional::analytic(ScalarField f) {
  RhsFunctional r;
  r.mode = RhsMode::AnalyticF;
  r.f = std::move(f);
  return r;
}

RhsFunctional RhsFunctional::exact_gradient(VectorField grad_u) {
  RhsFunctional r;
  r.mode = RhsMode::ExactGradient;
  r.grad_u = std::move(grad_u);
  return r;
}

RhsFunctional RhsFunctional::zero() { return analytic([](const Vec2&) { return 0.0; }); }

Discretization::Discretization(MeshPtr mesh, NFunction phi, Weight weight, RhsFunctional rhs, int degree)
    : mesh_(std::move(mesh)),
      phi_(std::move(phi)),
      weight_(std::move(weight)),
      rhs_(std::move(rhs)),
      quad_(build_quadrature(mesh_, weight_, degree)) {
  const std::size_t nc = mesh_->num_cells();
  std::vector<std::array<double, 3>> local(nc);
  parallel_for(nc, [&](std::size_t t) {
    const int ti = static_cast<int>(t);
    const auto& g = mesh_->basis_gradients(ti);
    std::array<double, 3> r{0.0, 0.0, 0.0};
    for (std::size_t i = quad_.offset[t]; i < quad_.offset[t + 1]; ++i) {
      const Vec2& x = quad_.x[i];
      const double wo = quad_.w[i] * quad_.omega[i];
      if (rhs_.mode == RhsMode::ExactGradient) {
        if (!rhs_.grad_u) throw DomainError("ExactGradient right-hand side needs grad_u");
        const Vec2 a = vector_A(phi_, rhs_.grad_u(x));
        for (int k = 0; k < 3; ++k) r[k] += wo * a.dot(g[k]);
      } else if (rhs_.f) {
        const double fx = rhs_.f(x);
        for (int k = 0; k < 3; ++k) r[k] += wo * fx * quad_.bary[i][k];
      }
      if (rhs_.extra_load) {
        const double e = rhs_.extra_load(x);
        for (int k = 0; k < 3; ++k) r[k] += quad_.w[i] * e * quad_.bary[i][k];
      }
    }
    local[t] = r;
  });
  load_ = VectorX::Zero(mesh_->num_vertices());
  for (std::size_t t = 0; t < nc; ++t) {
    const Cell& c = mesh_->cell(static_cast<int>(t));
    for (int k = 0; k < 3; ++k) load_[c[k]] += local[t][k];
  }
}

double Discretization::rhs_value(const FeFunction& v) const { return load_.dot(v.values()); }

double Discretization::energy(const FeFunction& v) const {
  const std::size_t nc = mesh_->num_cells();
  std::vector<double> e(nc);
  parallel_for(nc, [&](std::size_t t) {
    const double g = v.gradient(static_cast<int>(t)).norm();
    e[t] = g == 0.0 ? 0.0 : quad_.cell_measure[t] * phi_.phi(g);
  });
  double s = 0.0;
  for (double x : e) s += x;
  return s - rhs_value(v);
}

VectorX Discretization::full_residual(const FeFunction& u) const {
  const std::size_t nc = mesh_->num_cells();
  std::vector<std::array<double, 3>> local(nc);
  parallel_for(nc, [&](std::size_t t) {
    const int ti = static_cast<int>(t);
    const Vec2 a = vector_A(phi_, u.gradient(ti)) * quad_.cell_measure[t];
    const auto& g = mesh_->basis_gradients(ti);
    local[t] = {a.dot(g[0]), a.dot(g[1]), a.dot(g[2])};
  });
  VectorX r = -load_;
  for (std::size_t t = 0; t < nc; ++t) {
    const Cell& c = mesh_->cell(static_cast<int>(t));
    for (int k = 0; k < 3; ++k) r[c[k]] += local[t][k];
  }
  return r;
}

VectorX Discretization::residual(const FeFunction& u) const {
  const VectorX full = full_residual(u);
  const auto& iv = mesh_->interior_vertices();
  VectorX r(iv.size());
  for (std::size_t i = 0; i < iv.size(); ++i) r[i] = full[iv[i]];
  return r;
}

namespace {

SpMat assemble_cells(const SimplicialMesh& m, const std::vector<Eigen::Matrix3d>& local) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * m.num_cells());
  for (std::size_t t = 0; t < m.num_cells(); ++t) {
    const Cell& c = m.cell(static_cast<int>(t));
    for (int i = 0; i < 3; ++i) {
      const int di = m.dof(c[i]);
      if (di < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int dj = m.dof(c[j]);
        if (dj < 0) continue;
        trip.emplace_back(di, dj, local[t](i, j));
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(m.num_dofs());
  SpMat M(n, n);
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

}  // namespace

SpMat Discretization::newton_matrix(const FeFunction& u, double eps_reg) const {
  const std::size_t nc = mesh_->num_cells();
  std::vector<Eigen::Matrix3d> local(nc);
  parallel_for(nc, [&](std::size_t t) {
    const int ti = static_cast<int>(t);
    const Mat2 D = linearized_A(phi_, u.gradient(ti), eps_reg) * quad_.cell_measure[t];
    const auto& g = mesh_->basis_gradients(ti);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) local[t](i, j) = g[i].dot(D * g[j]);
    }
    local[t] = 0.5 * (local[t] + local[t].transpose()).eval();
  });
  return assemble_cells(*mesh_, local);
}

SpMat Discretization::stiffness_matrix() const {
  const std::size_t nc = mesh_->num_cells();
  std::vector<Eigen::Matrix3d> local(nc);
  parallel_for(nc, [&](std::size_t t) {
    const int ti = static_cast<int>(t);
    const auto& g = mesh_->basis_gradients(ti);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) local[t](i, j) = quad_.cell_measure[t] * g[i].dot(g[j]);
    }
  });
  return assemble_cells(*mesh_, local);
}

// ---------------------------------------------------------------------------

void write_fe_function(std::ostream& os, const FeFunction& v) {
  write_mesh(os, v.mesh());
  for (Eigen::Index i = 0; i < v.values().size(); ++i) os << format_double(v.values()[i]) << '\n';
}

FeFunction read_fe_function(std::istream& is) {
  auto mesh = std::make_shared<const SimplicialMesh>(read_mesh(is));
  VectorX vals(mesh->num_vertices());
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    std::string tok;
    if (!(is >> tok)) throw FormatError("FE function file truncated");
    vals[i] = parse_double(tok);
  }
  return FeFunction(mesh, std::move(vals), false);
}

}  // namespace wofem
