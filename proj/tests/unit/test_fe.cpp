#include "wofem/fe.hpp"
#include "wofem/fields.hpp"
#include "wofem/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace wofem;

namespace {

MeshPtr square(int n, Pattern pat = Pattern::CrissCross) {
  return std::make_shared<const SimplicialMesh>(structured_rect(n, n, {}, pat));
}

MeshPtr refined(int n, int levels) {
  SimplicialMesh m = structured_rect(n, n);
  for (int l = 0; l < levels; ++l) m = refine_uniform(m);
  return std::make_shared<const SimplicialMesh>(std::move(m));
}

FeFunction random_fe(MeshPtr m, std::mt19937_64& rng, bool constrained = true, double scale = 1.0) {
  std::uniform_real_distribution<double> U(-scale, scale);
  VectorX v(m->num_vertices());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = U(rng);
  return FeFunction(m, v, constrained);
}

// ∫ over the reference triangle of x^a y^b = a! b! / (a + b + 2)!
double ref_monomial(int a, int b) { return std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3); }

}  // namespace

TEST(Quadrature, GaussLegendreExact) {
  for (int n = 1; n <= 20; ++n) {
    const GaussRule1D g = gauss_legendre(n);
    for (int k = 0; k < 2 * n; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += g.weights[i] * std::pow(g.nodes[i], k);
      EXPECT_NEAR(s, 1.0 / (k + 1), 1e-14) << n << " " << k;
    }
  }
}

TEST(Quadrature, TriangleRulesExact) {
  for (int deg = 0; deg <= 12; ++deg) {
    const QuadratureRule r = triangle_rule(deg);
    EXPECT_GE(r.degree, deg);
    double sum = 0.0;
    for (double w : r.weights) {
      EXPECT_GT(w, 0.0);
      sum += w;
    }
    EXPECT_NEAR(sum, 0.5, 1e-15);
    for (int a = 0; a <= deg; ++a) {
      for (int b = 0; a + b <= deg; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i)
          s += r.weights[i] * std::pow(r.points[i][0], a) * std::pow(r.points[i][1], b);
        EXPECT_NEAR(s, ref_monomial(a, b), 1e-14) << deg << " " << a << " " << b;
      }
    }
  }
  EXPECT_EQ(triangle_rule(6).size(), 12u);
}

TEST(Quadrature, AdaptiveIntegral) {
  EXPECT_NEAR(integrate_adaptive([](double t) { return std::sqrt(t); }, 0.0, 1.0), 2.0 / 3.0, 1e-10);
  EXPECT_NEAR(integrate_adaptive([](double t) { return std::exp(t); }, 0.0, 2.0), std::exp(2.0) - 1.0, 1e-9);
}

TEST(WeightedQuadrature, AreaAndSingularWeight) {
  const MeshPtr m = square(4);
  const WeightedQuadrature q = build_quadrature(m, Weight::constant(2.0));
  double s = 0.0;
  for (double w : q.w) s += w;
  EXPECT_NEAR(s, 1.0, 1e-13);
  double mu = 0.0;
  for (double c : q.cell_measure) mu += c;
  EXPECT_NEAR(mu, 2.0, 1e-13);
  // ∫_{[0,1]²} |x - (½,½)|^{-1} = 4 asinh(1)
  const Weight w = Weight::radial_power(Vec2(0.5, 0.5), -1.0);
  const double exact = 4.0 * std::asinh(1.0);
  double prev_err = 1.0;
  for (int sub : {0, 2, 6}) {
    const WeightedQuadrature qs = build_quadrature(m, w, 6, sub);
    double I = 0.0;
    for (double c : qs.cell_measure) I += c;
    const double err = std::abs(I - exact) / exact;
    EXPECT_LE(err, prev_err);
    prev_err = err;
  }
  EXPECT_LT(prev_err, 1e-3);
}

TEST(Modular, Oracles) {
  const MeshPtr m = square(4);
  const WeightedQuadrature q1 = build_quadrature(m, Weight::constant(1.0));
  EXPECT_EQ(modular(make_power(3.0), q1, std::vector<double>(q1.size(), 0.0)), 0.0);
  EXPECT_NEAR(modular(make_power(2.0), q1, std::vector<double>(q1.size(), 1.7)), 1.7 * 1.7 / 2.0, 1e-13);

  // Φ_3, ω = |x|, g = x₁ against Monte Carlo
  const WeightedQuadrature qw = build_quadrature(square(8), Weight::radial_power(Vec2::Zero(), 1.0));
  const double val = modular(make_power(3.0), qw, sample_function(qw, [](const Vec2& x) { return x.x(); }));
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double mc = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const Vec2 x(U(rng), U(rng));
    mc += x.norm() * std::pow(x.x(), 3) / 3.0;
  }
  mc /= n;
  EXPECT_NEAR(val / mc, 1.0, 1e-3);
}

TEST(Luxemburg, PowerClosedFormAndHomogeneity) {
  const MeshPtr m = square(6);
  const AnalyticField s = sine_field();
  for (double p : {1.5, 2.0, 3.0}) {
    for (const Weight& w : {Weight::constant(1.0), Weight::radial_power(Vec2(0.5, 0.5), 0.5)}) {
      const WeightedQuadrature q = build_quadrature(m, w);
      const std::vector<double> g = sample_function(q, s.value);
      const double closed = std::pow(p, -1.0 / p) * std::pow(lp_integral(q, g, p), 1.0 / p);
      const double lux = luxemburg_norm(make_power(p), q, g);
      EXPECT_NEAR(lux, closed, 1e-9 * closed);
      std::vector<double> cg(g);
      for (double& v : cg) v *= -3.5;
      EXPECT_NEAR(luxemburg_norm(make_power(p), q, cg), 3.5 * lux, 1e-9 * 3.5 * lux);
    }
  }
  const WeightedQuadrature q = build_quadrature(m, Weight::constant(1.0));
  EXPECT_EQ(luxemburg_norm(make_power(2.0), q, std::vector<double>(q.size(), 0.0)), 0.0);
  // shifted family: bisection result satisfies modular(g/k) = 1
  const std::vector<double> g = sample_function(q, [](const Vec2& x) { return 1.0 + x.x(); });
  const NFunction phi = make_shifted_power(3.0, 0.5);
  const double k = luxemburg_norm(phi, q, g);
  std::vector<double> gk(g);
  for (double& v : gk) v /= k;
  EXPECT_NEAR(modular(phi, q, gk), 1.0, 1e-8);
}

TEST(Energy, TwoCellHandAssembly) {
  const MeshPtr m = square(1, Pattern::Diagonal);
  const FeFunction v = FeFunction::interpolate(m, [](const Vec2& x) { return x.x() + 2.0 * x.y(); });
  const Discretization one(m, make_power(2.0), Weight::constant(1.0), RhsFunctional::analytic([](const Vec2&) { return 1.0; }));
  // ½|∇v|² = 5/2, ∫v = 3/2
  EXPECT_NEAR(one.energy(v), 1.0, 1e-14);
  const Discretization lin(m, make_power(2.0), Weight::constant(1.0), RhsFunctional::analytic([](const Vec2& x) { return x.x(); }));
  // ∫ x(x + 2y) = 1/3 + 1/2
  EXPECT_NEAR(lin.energy(v), 2.5 - 5.0 / 6.0, 1e-14);
  EXPECT_EQ(lin.energy(FeFunction(m)), 0.0);
}

TEST(Residual, StiffnessOracle) {
  // Φ_2, ω ≡ 1: R = K c - b, with K from the cotangent formula
  const MeshPtr m = square(2);
  const Discretization d(m, make_power(2.0), Weight::constant(1.0), RhsFunctional::analytic([](const Vec2&) { return 1.0; }));
  std::mt19937_64 rng(23);
  const FeFunction u = random_fe(m, rng, false);
  const std::size_t nv = m->num_vertices();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nv, nv);
  VectorX b = VectorX::Zero(nv);
  for (const Cell& c : m->cells()) {
    const Vec2 P[3] = {m->vertex(c[0]), m->vertex(c[1]), m->vertex(c[2])};
    const Vec2 e01 = P[1] - P[0], e02 = P[2] - P[0];
    const double area = 0.5 * (e01.x() * e02.y() - e01.y() * e02.x());
    for (int k = 0; k < 3; ++k) {
      const int i = (k + 1) % 3, j = (k + 2) % 3;
      const Vec2 a = P[i] - P[k], bb = P[j] - P[k];
      const double cot = a.dot(bb) / (a.x() * bb.y() - a.y() * bb.x());
      K(c[i], c[j]) -= 0.5 * cot;
      K(c[j], c[i]) -= 0.5 * cot;
      K(c[i], c[i]) += 0.5 * cot;
      K(c[j], c[j]) += 0.5 * cot;
      b[c[k]] += area / 3.0;
    }
  }
  const VectorX expect = K * u.values() - b;
  const VectorX R = d.full_residual(u);
  EXPECT_NEAR((R - expect).lpNorm<Eigen::Infinity>(), 0.0, 1e-13);
  const VectorX Ri = d.residual(u);
  for (int v : m->interior_vertices()) EXPECT_NEAR(Ri[m->dof(v)], expect[v], 1e-13);
}

TEST(Residual, GradientOfEnergy) {
  const MeshPtr m = square(4);
  const AnalyticField ex = sine_field();
  struct Case {
    NFunction phi;
    Weight w;
    RhsFunctional rhs;
  };
  const std::vector<Case> cases{
      {make_power(3.0), Weight::radial_power(Vec2(0.5, 0.5), 0.5), RhsFunctional::analytic(ex.value)},
      {make_shifted_power(1.5, 0.1), Weight::constant(1.0), RhsFunctional::exact_gradient(ex.gradient)},
      {make_power(2.0), Weight::radial_power(Vec2(0.25, 0.5), -1.0), RhsFunctional::analytic(ex.value)},
  };
  std::mt19937_64 rng(29);
  for (const Case& c : cases) {
    const Discretization d(m, c.phi, c.w, c.rhs);
    const FeFunction u = random_fe(m, rng);
    const VectorX R = d.residual(u);
    for (int k = 0; k < 10; ++k) {
      const VectorX dir = random_fe(m, rng).interior_values();
      const double h = 1e-5;
      FeFunction up(m, true), um(m, true);
      up.set_interior_values(u.interior_values() + h * dir);
      um.set_interior_values(u.interior_values() - h * dir);
      const double fd = (d.energy(up) - d.energy(um)) / (2.0 * h);
      const double an = R.dot(dir);
      EXPECT_NEAR(fd, an, 1e-5 * std::max(1.0, std::abs(an))) << c.phi.describe();
    }
  }
}

TEST(Newton, QuadraticIsStiffness) {
  const MeshPtr m = square(3);
  const Discretization d(m, make_power(2.0), Weight::radial_power(Vec2(0.5, 0.5), 0.5), RhsFunctional::zero());
  std::mt19937_64 rng(31);
  const SpMat K = d.stiffness_matrix();
  for (int k = 0; k < 3; ++k) {
    const SpMat M = d.newton_matrix(random_fe(m, rng));
    EXPECT_NEAR(Eigen::MatrixXd(M - K).cwiseAbs().maxCoeff(), 0.0, 1e-13);
  }
}

TEST(Newton, SymmetricAndMatchesFiniteDifferences) {
  const MeshPtr m = square(4);
  std::mt19937_64 rng(37);
  for (const NFunction& phi : {make_power(3.0), make_shifted_power(1.5, 0.1), make_power(2.5)}) {
    const Discretization d(m, phi, Weight::radial_power(Vec2(0.5, 0.5), 0.5), RhsFunctional::zero());
    for (int k = 0; k < 5; ++k) {
      const FeFunction u = random_fe(m, rng, true, 2.0);
      const Eigen::MatrixXd M(d.newton_matrix(u));
      EXPECT_LE((M - M.transpose()).cwiseAbs().maxCoeff(), 1e-12 * M.cwiseAbs().maxCoeff());
      const VectorX w = random_fe(m, rng).interior_values();
      const double eps = 1e-6;
      FeFunction up(m, true);
      up.set_interior_values(u.interior_values() + eps * w);
      const VectorX fd = (d.residual(up) - d.residual(u)) / eps;
      const VectorX an = M * w;
      EXPECT_LE((fd - an).norm(), 1e-4 * an.norm()) << phi.describe();
    }
  }
}

TEST(FeFunction, ConstraintProlongationAndIo) {
  const MeshPtr c = square(3);
  const MeshPtr f = std::make_shared<const SimplicialMesh>(refine_uniform(*c));
  std::mt19937_64 rng(41);
  const FeFunction u = random_fe(c, rng, true);
  for (std::size_t v = 0; v < c->num_vertices(); ++v)
    if (c->is_boundary_vertex(static_cast<int>(v))) EXPECT_EQ(u[static_cast<int>(v)], 0.0);
  const FeFunction uf = prolongate(u, f);
  EXPECT_TRUE(uf.boundary_constrained());
  for (std::size_t v = 0; v < f->num_vertices(); ++v) {
    std::array<double, 3> b;
    const int t = locate(*c, f->vertex(static_cast<int>(v)), &b);
    EXPECT_NEAR(uf[static_cast<int>(v)], u.value(t, b), 1e-14);
  }
  std::stringstream ss;
  write_fe_function(ss, uf);
  const FeFunction back = read_fe_function(ss);
  EXPECT_EQ(back.values(), uf.values());
  EXPECT_EQ(mesh_to_string(back.mesh()), mesh_to_string(*f));
}

TEST(Property, ModularPoincareLevelStable) {
  const AnalyticField s = sine_field();
  const std::vector<std::pair<NFunction, Weight>> matrix{
      {make_power(2.0), Weight::constant(1.0)},
      {make_power(3.0), Weight::radial_power(Vec2(0.5, 0.5), 0.5)},
      {make_shifted_power(1.5, 0.1), Weight::constant(1.0)},
  };
  for (const auto& [phi, w] : matrix) {
    for (double scale : {0.1, 1.0, 10.0}) {
      double lo = 1e300, hi = 0.0;
      for (int l = 0; l < 4; ++l) {
        const MeshPtr m = refined(4, l);
        const WeightedQuadrature q = build_quadrature(m, w);
        const FeFunction v = FeFunction::interpolate(m, [&](const Vec2& x) { return scale * s.value(x); }, true);
        const double r = modular(phi, q, sample_values(q, v)) / modular(phi, q, sample_gradient_norm(q, v));
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      EXPECT_LE(hi / lo, 1.2) << phi.describe() << " " << scale;
    }
  }
}

TEST(Property, EmbeddingPhi4) {
  // ½ t² ≤ G Φ_4(t) + ½ T² with T = 1, G = 2
  const NFunction phi = make_power(4.0);
  const Weight w = Weight::radial_power(Vec2(0.5, 0.5), 0.5);
  const AnalyticField s = sine_field();
  for (int l = 0; l < 4; ++l) {
    const MeshPtr m = refined(4, l);
    const WeightedQuadrature q = build_quadrature(m, w);
    double omega = 0.0;
    for (double c : q.cell_measure) omega += c;
    for (double scale : {0.1, 1.0, 10.0}) {
      const FeFunction v = FeFunction::interpolate(m, [&](const Vec2& x) { return scale * s.value(x); }, true);
      const std::vector<double> g = sample_values(q, v);
      EXPECT_LE(0.5 * lp_integral(q, g, 2.0), 2.0 * modular(phi, q, g) + 0.5 * omega);
    }
  }
}

TEST(Property, Holder) {
  const MeshPtr m = square(4);
  const Weight w = Weight::radial_power(Vec2(0.5, 0.5), 0.5);
  const WeightedQuadrature q = build_quadrature(m, w);
  std::mt19937_64 rng(43);
  for (const NFunction& phi : {make_power(3.0), make_shifted_power(2.0, 1.0)}) {
    const NFunction star = conjugate(phi);
    for (int k = 0; k < 50; ++k) {
      const std::vector<double> v = sample_values(q, random_fe(m, rng, false, 3.0));
      const std::vector<double> u = sample_values(q, random_fe(m, rng, false, 3.0));
      double lhs = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) lhs += q.w[i] * q.omega[i] * std::abs(v[i] * u[i]);
      EXPECT_LE(lhs, 2.0 * luxemburg_norm(phi, q, v) * luxemburg_norm(star, q, u) * (1.0 + 1e-9));
    }
  }
}
