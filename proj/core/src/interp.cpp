#include "wofem/interp.hpp"

#include "wofem/errors.hpp"
#include "wofem/parallel.hpp"
#include "wofem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

namespace wofem {

namespace {

std::array<double, 3> barycentric(const SimplicialMesh& m, int t, const Vec2& x) {
  const Cell& c = m.cell(t);
  const auto& g = m.basis_gradients(t);
  return {1.0 + g[0].dot(x - m.vertex(c[0])), 1.0 + g[1].dot(x - m.vertex(c[1])), 1.0 + g[2].dot(x - m.vertex(c[2]))};
}

int local_index(const Cell& c, int v) {
  for (int k = 0; k < 3; ++k) {
    if (c[k] == v) return k;
  }
  return -1;
}

/// The cell carrying boundary face f.
int face_cell(const SimplicialMesh& m, const Edge& f) {
  for (int t : m.vertex_cells(f[0])) {
    if (local_index(m.cell(t), f[1]) >= 0) return t;
  }
  throw FormatError("boundary face without cell");
}

}  // namespace

SzOperator::SzOperator(MeshPtr mesh) : mesh_(std::move(mesh)) {
  simplex_.resize(mesh_->num_vertices());
  for (std::size_t v = 0; v < mesh_->num_vertices(); ++v) {
    const int vi = static_cast<int>(v);
    if (mesh_->is_boundary_vertex(vi)) {
      simplex_[v] = {true, mesh_->vertex_boundary_faces(vi).front()};
    } else {
      simplex_[v] = {false, mesh_->vertex_cells(vi).front()};
    }
  }
}

double SzOperator::average(int v, const std::function<double(int, const std::array<double, 3>&, const Vec2&)>& f) const {
  const Simplex& s = simplex_[v];
  const SimplicialMesh& m = *mesh_;
  double sum = 0.0;
  if (!s.face) {
    static const QuadratureRule rule = triangle_rule(6);
    const int t = s.index;
    const int k = local_index(m.cell(t), v);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double xi = rule.points[q][0], eta = rule.points[q][1];
      const std::array<double, 3> l{1.0 - xi - eta, xi, eta};
      // ∫_T ψ_v f with ψ_v = (12 λ_v - 3) / |T|; the Jacobian is 2|T|.
      sum += 2.0 * rule.weights[q] * (12.0 * l[k] - 3.0) * f(t, l, m.map(t, xi, eta));
    }
    return sum;
  }
  static const GaussRule1D g = gauss_legendre(6);
  const Edge& e = m.boundary_faces()[s.index];
  const int t = face_cell(m, e);
  for (std::size_t q = 0; q < g.nodes.size(); ++q) {
    const double u = g.nodes[q];
    const Vec2 x = (1.0 - u) * m.vertex(e[0]) + u * m.vertex(e[1]);
    const double lv = e[0] == v ? 1.0 - u : u;
    // ψ_v = (6 λ_v - 2) / |F|; the Jacobian is |F|.
    sum += g.weights[q] * (6.0 * lv - 2.0) * f(t, barycentric(m, t, x), x);
  }
  return sum;
}

FeFunction SzOperator::apply(const ScalarField& f, bool boundary_constrained) const {
  VectorX vals(mesh_->num_vertices());
  parallel_for(mesh_->num_vertices(), [&](std::size_t v) {
    vals[v] = average(static_cast<int>(v), [&](int, const std::array<double, 3>&, const Vec2& x) { return f(x); });
  });
  return FeFunction(mesh_, std::move(vals), boundary_constrained);
}

FeFunction SzOperator::apply(const FeFunction& f, bool boundary_constrained) const {
  if (&f.mesh() != mesh_.get() && f.mesh().num_vertices() != mesh_->num_vertices())
    throw DomainError("SzOperator: FE function lives on a different mesh");
  VectorX vals(mesh_->num_vertices());
  parallel_for(mesh_->num_vertices(), [&](std::size_t v) {
    vals[v] = average(static_cast<int>(v),
                      [&](int t, const std::array<double, 3>& l, const Vec2&) { return f.value(t, l); });
  });
  return FeFunction(mesh_, std::move(vals), boundary_constrained);
}

std::vector<double> SzOperator::dual_moments(int v) const {
  const Simplex& s = simplex_[v];
  std::vector<int> verts;
  if (s.face) {
    const Edge& e = mesh_->boundary_faces()[s.index];
    verts = {e[0], e[1]};
  } else {
    const Cell& c = mesh_->cell(s.index);
    verts = {c[0], c[1], c[2]};
  }
  std::vector<double> out;
  for (int w : verts) {
    out.push_back(average(v, [&](int t, const std::array<double, 3>& l, const Vec2&) {
      const int k = local_index(mesh_->cell(t), w);
      return k >= 0 ? l[k] : 0.0;
    }));
  }
  return out;
}

// ---------------------------------------------------------------------------

PpInterpolant::PpInterpolant(MeshPtr mesh, int radial_points, int angular_points_per_wedge) : mesh_(std::move(mesh)) {
  const SimplicialMesh& m = *mesh_;
  const auto& iv = m.interior_vertices();
  stars_.resize(iv.size());
  nodes_.resize(iv.size());
  const GaussRule1D gr = gauss_legendre(radial_points);
  const GaussRule1D ga = gauss_legendre(angular_points_per_wedge);
  parallel_for(iv.size(), [&](std::size_t d) {
    const int v = iv[d];
    stars_[d] = inscribed_ball(m, v);
    const double r = stars_[d].radius;
    const Vec2& xv = m.vertex(v);
    auto& nodes = nodes_[d];
    for (int t : stars_[d].cells) {
      const Cell& c = m.cell(t);
      const int k = local_index(c, v);
      const Vec2 ea = m.vertex(c[(k + 1) % 3]) - xv;
      const Vec2 eb = m.vertex(c[(k + 2) % 3]) - xv;
      const double th0 = std::atan2(ea.y(), ea.x());
      const double span = std::atan2(ea.x() * eb.y() - ea.y() * eb.x(), ea.dot(eb));
      for (std::size_t a = 0; a < ga.nodes.size(); ++a) {
        const double th = th0 + ga.nodes[a] * span;
        const Vec2 e(std::cos(th), std::sin(th));
        for (std::size_t i = 0; i < gr.nodes.size(); ++i) {
          const double rho = gr.nodes[i] * r;
          Node n;
          n.cell = t;
          n.x = xv + rho * e;
          n.bary = barycentric(m, t, n.x);
          n.w = ga.weights[a] * span * gr.weights[i] * r * rho;
          nodes.push_back(n);
        }
      }
    }
  });
}

double PpInterpolant::ball_measure(int dof) const {
  double s = 0.0;
  for (const Node& n : nodes_[dof]) s += n.w;
  return s;
}

FeFunction PpInterpolant::apply(const ScalarField& f) const {
  VectorX vals = VectorX::Zero(mesh_->num_vertices());
  const auto& iv = mesh_->interior_vertices();
  parallel_for(iv.size(), [&](std::size_t d) {
    double s = 0.0, wsum = 0.0;
    for (const Node& n : nodes_[d]) {
      s += n.w * f(n.x);
      wsum += n.w;
    }
    vals[iv[d]] = s / wsum;
  });
  return FeFunction(mesh_, std::move(vals), true);
}

FeFunction PpInterpolant::apply(const FeFunction& f) const {
  VectorX vals = VectorX::Zero(mesh_->num_vertices());
  const auto& iv = mesh_->interior_vertices();
  parallel_for(iv.size(), [&](std::size_t d) {
    double s = 0.0, wsum = 0.0;
    for (const Node& n : nodes_[d]) {
      s += n.w * f.value(n.cell, n.bary);
      wsum += n.w;
    }
    vals[iv[d]] = s / wsum;
  });
  return FeFunction(mesh_, std::move(vals), true);
}

// ---------------------------------------------------------------------------

std::string to_string(StabilityKind k) {
  switch (k) {
    case StabilityKind::SZ_L1: return "SZ_L1";
    case StabilityKind::SZ_weighted_modular: return "SZ_weighted_modular";
    case StabilityKind::SZ_shifted: return "SZ_shifted";
    case StabilityKind::PP_Lp: return "PP_Lp";
    case StabilityKind::PP_weighted_modular: return "PP_weighted_modular";
    case StabilityKind::PP_weighted_approx: return "PP_weighted_approx";
  }
  return "unknown";
}

const std::vector<StabilityKind>& all_stability_kinds() {
  static const std::vector<StabilityKind> kinds{StabilityKind::SZ_L1,         StabilityKind::SZ_weighted_modular,
                                                StabilityKind::SZ_shifted,    StabilityKind::PP_Lp,
                                                StabilityKind::PP_weighted_modular, StabilityKind::PP_weighted_approx};
  return kinds;
}

StabilityKind stability_kind_from_string(const std::string& s) {
  for (StabilityKind k : all_stability_kinds()) {
    if (to_string(k) == s) return k;
  }
  throw FormatError("unknown stability kind '" + s + "'");
}

TestBank TestBank::standard() {
  TestBank b;
  b.fields = {sine_field(1.0), kinked_field()};
  return b;
}

FeFunction random_fe_function(MeshPtr m, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  VectorX vals = VectorX::Zero(m->num_vertices());
  for (std::size_t v = 0; v < m->num_vertices(); ++v) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (!m->is_boundary_vertex(static_cast<int>(v))) vals[v] = lo + (hi - lo) * u;
  }
  return FeFunction(std::move(m), std::move(vals), true);
}

namespace {

/// A bank member restricted to one level: analytic or P1 on the level mesh.
struct LevelFunction {
  std::string name;
  const AnalyticField* field = nullptr;
  std::optional<FeFunction> fe;

  std::vector<double> values(const WeightedQuadrature& q) const {
    return fe ? sample_values(q, *fe) : sample_function(q, field->value);
  }
  std::vector<Vec2> gradients(const WeightedQuadrature& q) const {
    std::vector<Vec2> out(q.size());
    for (std::size_t t = 0; t + 1 < q.offset.size(); ++t) {
      const Vec2 gt = fe ? fe->gradient(static_cast<int>(t)) : Vec2::Zero();
      for (std::size_t i = q.offset[t]; i < q.offset[t + 1]; ++i) out[i] = fe ? gt : field->gradient(q.x[i]);
    }
    return out;
  }
};

std::vector<LevelFunction> bank_on_level(const TestBank& bank, const MeshPtr& m) {
  std::vector<LevelFunction> out;
  for (const AnalyticField& f : bank.fields) out.push_back({f.name, &f, std::nullopt});
  if (bank.random_fe) {
    const Box box = m->bounding_box();
    auto coarse = std::make_shared<const SimplicialMesh>(
        structured_rect(bank.random_coarse_n, bank.random_coarse_n, box, Pattern::CrissCross));
    const FeFunction rc = random_fe_function(coarse, bank.seed);
    VectorX vals(m->num_vertices());
    for (std::size_t v = 0; v < m->num_vertices(); ++v) {
      std::array<double, 3> l;
      const int t = locate(*coarse, m->vertex(static_cast<int>(v)), &l);
      vals[v] = t < 0 ? 0.0 : rc.value(t, l);
    }
    out.push_back({"random_fe", nullptr, FeFunction(m, std::move(vals), true)});
  }
  return out;
}

/// Per-cell integrals of a node quantity.
std::vector<double> cell_integrals(const WeightedQuadrature& q, const std::function<double(std::size_t, std::size_t)>& f) {
  const std::size_t nc = q.offset.size() - 1;
  std::vector<double> out(nc, 0.0);
  parallel_for(nc, [&](std::size_t t) {
    double s = 0.0;
    for (std::size_t i = q.offset[t]; i < q.offset[t + 1]; ++i) s += q.w[i] * f(t, i);
    out[t] = s;
  });
  return out;
}

std::vector<double> cell_maxima(const WeightedQuadrature& q, const std::function<double(std::size_t, std::size_t)>& f) {
  const std::size_t nc = q.offset.size() - 1;
  std::vector<double> out(nc, 0.0);
  for (std::size_t t = 0; t < nc; ++t) {
    for (std::size_t i = q.offset[t]; i < q.offset[t + 1]; ++i) out[t] = std::max(out[t], f(t, i));
  }
  return out;
}

struct LevelGeometry {
  std::vector<std::vector<int>> patches;
  std::vector<double> patch_area;
  ShapeMetrics shape;
};

LevelGeometry geometry(const SimplicialMesh& m) {
  LevelGeometry g;
  g.patches.resize(m.num_cells());
  g.patch_area.resize(m.num_cells());
  for (std::size_t t = 0; t < m.num_cells(); ++t) {
    g.patches[t] = patch_of_element(m, static_cast<int>(t));
    double a = 0.0;
    for (int s : g.patches[t]) a += m.area(s);
    g.patch_area[t] = a;
  }
  g.shape = shape_metrics(m);
  return g;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// ratio_T = (num[T] / |T|^avg) / (agg_{S_T} den / |S_T|^avg), NaN when the
/// patch quantity is negligible.
std::vector<double> patch_ratio(const SimplicialMesh& m, const LevelGeometry& g, const std::vector<double>& num,
                                const std::vector<double>& den, bool averaged, bool use_max = false) {
  const std::size_t nc = m.num_cells();
  std::vector<double> agg(nc, 0.0);
  double agg_max = 0.0;
  for (std::size_t t = 0; t < nc; ++t) {
    double s = 0.0;
    for (int c : g.patches[t]) s = use_max ? std::max(s, den[c]) : s + den[c];
    agg[t] = s;
    agg_max = std::max(agg_max, s);
  }
  std::vector<double> r(nc, kNaN);
  for (std::size_t t = 0; t < nc; ++t) {
    if (!(agg[t] > 1e-12 * agg_max)) continue;
    if (averaged) {
      r[t] = (num[t] / m.area(static_cast<int>(t))) / (agg[t] / g.patch_area[t]);
    } else {
      r[t] = num[t] / agg[t];
    }
  }
  return r;
}

void take_max(std::vector<double>& acc, const std::vector<double>& r) {
  if (acc.empty()) {
    acc = r;
    return;
  }
  for (std::size_t i = 0; i < acc.size(); ++i) {
    if (std::isnan(acc[i]) || (!std::isnan(r[i]) && r[i] > acc[i])) acc[i] = r[i];
  }
}

std::vector<double> element_ratios(StabilityKind kind, const StabilityProblem& pb, const WeightedQuadrature& q,
                                   const LevelGeometry& g, const SzOperator& sz, const PpInterpolant& pp,
                                   const LevelFunction& f) {
  const SimplicialMesh& m = *q.mesh;
  const std::vector<Vec2> grads = f.gradients(q);
  std::vector<double> out;

  auto interp = [&](bool positivity) {
    if (positivity) return f.fe ? pp.apply(*f.fe) : pp.apply(f.field->value);
    return f.fe ? sz.apply(*f.fe) : sz.apply(f.field->value);
  };

  switch (kind) {
    case StabilityKind::SZ_L1: {
      const FeFunction pi = interp(false);
      const auto num = cell_integrals(q, [&](std::size_t t, std::size_t) { return pi.gradient(static_cast<int>(t)).norm(); });
      const auto den = cell_integrals(q, [&](std::size_t, std::size_t i) { return grads[i].norm(); });
      return patch_ratio(m, g, num, den, false);
    }
    case StabilityKind::SZ_weighted_modular:
    case StabilityKind::SZ_shifted:
    case StabilityKind::PP_weighted_modular: {
      const FeFunction pi = interp(kind == StabilityKind::PP_weighted_modular);
      std::vector<double> shifts{0.0};
      if (kind != StabilityKind::SZ_weighted_modular) shifts = pb.shifts;
      for (double a : shifts) {
        const NFunction phi = shift(pb.phi, a);
        std::vector<double> cell_phi(m.num_cells());
        for (std::size_t t = 0; t < m.num_cells(); ++t) cell_phi[t] = phi.phi(pi.gradient(static_cast<int>(t)).norm());
        const auto num = cell_integrals(q, [&](std::size_t t, std::size_t i) { return q.omega[i] * cell_phi[t]; });
        const auto den = cell_integrals(q, [&](std::size_t, std::size_t i) { return q.omega[i] * phi.phi(grads[i].norm()); });
        take_max(out, patch_ratio(m, g, num, den, true));
      }
      return out;
    }
    case StabilityKind::PP_Lp: {
      const FeFunction pw = interp(true);
      const std::vector<double> vals = f.values(q);
      const std::vector<double> pvals = sample_values(q, pw);
      for (double p : pb.lp_exponents) {
        const bool inf = std::isinf(p);
        for (int grad = 0; grad < 2; ++grad) {
          auto lhs = [&](std::size_t t, std::size_t i) {
            const double a = grad ? pw.gradient(static_cast<int>(t)).norm() : std::abs(pvals[i]);
            return inf ? a : std::pow(a, p);
          };
          auto rhs = [&](std::size_t, std::size_t i) {
            const double a = grad ? grads[i].norm() : std::abs(vals[i]);
            return inf ? a : std::pow(a, p);
          };
          std::vector<double> r;
          if (inf) {
            r = patch_ratio(m, g, cell_maxima(q, lhs), cell_maxima(q, rhs), false, true);
          } else {
            r = patch_ratio(m, g, cell_integrals(q, lhs), cell_integrals(q, rhs), false);
            for (double& x : r) x = std::pow(x, 1.0 / p);
          }
          take_max(out, r);
        }
      }
      return out;
    }
    case StabilityKind::PP_weighted_approx: {
      const FeFunction pw = interp(true);
      const std::vector<double> vals = f.values(q);
      const std::vector<double> pvals = sample_values(q, pw);
      const auto num = cell_integrals(q, [&](std::size_t, std::size_t i) {
        const double d = vals[i] - pvals[i];
        return q.omega[i] * d * d;
      });
      const auto den = cell_integrals(q, [&](std::size_t, std::size_t i) { return q.omega[i] * grads[i].squaredNorm(); });
      auto r = patch_ratio(m, g, num, den, false);
      for (std::size_t t = 0; t < r.size(); ++t) r[t] = std::sqrt(r[t]) / g.shape.h[t];
      return r;
    }
  }
  return out;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
  }
  return m;
}

}  // namespace

std::vector<StabilityRow> stability_ratio_report(StabilityKind kind, const StabilityProblem& problem,
                                                 const std::vector<MeshPtr>& levels, const TestBank& bank) {
  std::vector<StabilityRow> rows;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const MeshPtr& m = levels[l];
    const WeightedQuadrature q = build_quadrature(m, problem.weight, problem.quad_degree);
    const LevelGeometry g = geometry(*m);
    const SzOperator sz(m);
    const PpInterpolant pp(m);
    StabilityRow row;
    row.level = static_cast<int>(l);
    row.h = g.shape.h_max;
    row.kind = kind;
    std::vector<double> pooled;
    for (const LevelFunction& f : bank_on_level(bank, m)) {
      const auto r = element_ratios(kind, problem, q, g, sz, pp, f);
      for (double x : r) {
        if (std::isnan(x)) continue;
        pooled.push_back(x);
        if (x > row.max_ratio) {
          row.max_ratio = x;
          row.worst_function = f.name;
        }
      }
    }
    row.median_ratio = median_of(pooled);
    rows.push_back(row);
  }
  return rows;
}

double level_spread(const std::vector<StabilityRow>& rows) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : rows) {
    lo = std::min(lo, r.max_ratio);
    hi = std::max(hi, r.max_ratio);
  }
  return rows.empty() || lo <= 0.0 ? std::numeric_limits<double>::infinity() : hi / lo;
}

std::vector<QuasiBestRow> quasi_best_report(const NFunction& phi, const Weight& w, const AnalyticField& v,
                                            const std::vector<MeshPtr>& levels, int quad_degree) {
  std::vector<QuasiBestRow> rows;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const MeshPtr& m = levels[l];
    const WeightedQuadrature q = build_quadrature(m, w, quad_degree);
    const LevelGeometry g = geometry(*m);
    const SzOperator sz(m);
    const FeFunction pi = sz.apply(v.value);
    const auto num = cell_integrals(q, [&](std::size_t t, std::size_t i) {
      const Vec2 d = vector_V(phi, v.gradient(q.x[i])) - vector_V(phi, pi.gradient(static_cast<int>(t)));
      return q.omega[i] * d.squaredNorm();
    });
    const auto den = cell_integrals(q, [&](std::size_t, std::size_t i) {
      const Mat2 J = linearized_V(phi, v.gradient(q.x[i])) * v.hessian(q.x[i]);
      return q.omega[i] * J.squaredNorm();
    });
    auto r = patch_ratio(*m, g, num, den, true);
    QuasiBestRow row;
    row.level = static_cast<int>(l);
    row.h = g.shape.h_max;
    std::vector<double> pooled;
    for (std::size_t t = 0; t < r.size(); ++t) {
      if (std::isnan(r[t])) continue;
      const double x = r[t] / (g.shape.h[t] * g.shape.h[t]);
      pooled.push_back(x);
      row.max_ratio = std::max(row.max_ratio, x);
    }
    row.median_ratio = median_of(pooled);
    rows.push_back(row);
  }
  return rows;
}

void write_stability_csv(std::ostream& os, const std::vector<StabilityRow>& rows) {
  os << "level,h,kind,max_ratio,median_ratio\n";
  for (const auto& r : rows) {
    os << r.level << ',' << format_double(r.h) << ',' << to_string(r.kind) << ',' << format_double(r.max_ratio) << ','
       << format_double(r.median_ratio) << '\n';
  }
}

}  // namespace wofem
