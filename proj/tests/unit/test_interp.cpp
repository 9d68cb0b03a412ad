#include "wofem/interp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace wofem;

namespace {

MeshPtr square(int n, Pattern pat = Pattern::CrissCross) {
  return std::make_shared<const SimplicialMesh>(structured_rect(n, n, {}, pat));
}

std::vector<MeshPtr> family(int base, int levels) {
  std::vector<MeshPtr> out{square(base)};
  for (int l = 1; l < levels; ++l) out.push_back(std::make_shared<const SimplicialMesh>(refine_uniform(*out.back())));
  return out;
}

TestBank smooth_bank() {
  TestBank b;
  b.fields = {sine_field()};
  b.random_fe = false;
  return b;
}

}  // namespace

TEST(ScottZhang, DualBasis) {
  const MeshPtr m = square(3);
  const SzOperator sz(m);
  for (std::size_t v = 0; v < m->num_vertices(); ++v) {
    const SzOperator::Simplex s = sz.simplex(static_cast<int>(v));
    EXPECT_EQ(s.face, m->is_boundary_vertex(static_cast<int>(v)));
    const std::vector<double> mom = sz.dual_moments(static_cast<int>(v));
    int ones = 0;
    for (double x : mom) {
      if (std::abs(x - 1.0) <= 1e-10) ++ones;
      else EXPECT_NEAR(x, 0.0, 1e-10);
    }
    EXPECT_EQ(ones, 1);
  }
}

TEST(ScottZhang, ProjectionConstantsAndTraces) {
  const MeshPtr m = square(4);
  const SzOperator sz(m);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    FeFunction w = random_fe_function(m, seed);
    VectorX vals = w.values();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (Eigen::Index i = 0; i < vals.size(); ++i) vals[i] = U(rng);
    w = FeFunction(m, vals, false);
    EXPECT_LE((sz.apply(w).values() - w.values()).lpNorm<Eigen::Infinity>(), 1e-9);
  }
  const FeFunction one = sz.apply([](const Vec2&) { return 1.0; });
  for (Eigen::Index i = 0; i < one.values().size(); ++i) EXPECT_NEAR(one.values()[i], 1.0, 1e-12);
  const FeFunction s = sz.apply(sine_field().value);
  for (std::size_t v = 0; v < m->num_vertices(); ++v)
    if (m->is_boundary_vertex(static_cast<int>(v))) EXPECT_NEAR(s[static_cast<int>(v)], 0.0, 1e-15);
}

TEST(ScottZhang, LinearityAndLocality) {
  const MeshPtr m = square(4);
  const SzOperator sz(m);
  const FeFunction a = random_fe_function(m, 11), b = random_fe_function(m, 12);
  const FeFunction lin = sz.apply(FeFunction(m, 2.0 * a.values() - 0.5 * b.values()));
  EXPECT_LE((lin.values() - (2.0 * sz.apply(a).values() - 0.5 * sz.apply(b).values())).lpNorm<Eigen::Infinity>(), 1e-12);
  // perturbing data at vertices outside σ_v leaves the value at v unchanged
  const FeFunction base = sz.apply(a);
  for (int v : {5, 17, 30}) {
    const SzOperator::Simplex s = sz.simplex(v);
    std::vector<int> keep;
    if (s.face) {
      const Edge e = m->boundary_faces()[s.index];
      keep = {e[0], e[1]};
    } else {
      const Cell c = m->cell(s.index);
      keep = {c[0], c[1], c[2]};
    }
    VectorX pert = a.values();
    for (Eigen::Index i = 0; i < pert.size(); ++i)
      if (std::find(keep.begin(), keep.end(), static_cast<int>(i)) == keep.end()) pert[i] += 3.0;
    EXPECT_EQ(sz.apply(FeFunction(m, pert))[v], base[v]);
  }
}

TEST(Pp, BallRuleAndConstants) {
  const MeshPtr m = square(4);
  const PpInterpolant pp(m);
  for (std::size_t d = 0; d < m->num_dofs(); ++d) {
    const double r = pp.star(static_cast<int>(d)).radius;
    EXPECT_NEAR(pp.ball_measure(static_cast<int>(d)), M_PI * r * r, 1e-10 * M_PI * r * r);
  }
  const FeFunction c = pp.apply([](const Vec2&) { return 2.5; });
  for (std::size_t v = 0; v < m->num_vertices(); ++v) {
    const int iv = static_cast<int>(v);
    EXPECT_NEAR(c[iv], m->is_boundary_vertex(iv) ? 0.0 : 2.5, 1e-12);
  }
}

TEST(Pp, Positivity) {
  const MeshPtr m = square(4);
  const PpInterpolant pp(m);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const FeFunction w = random_fe_function(m, seed, 0.0, 1.0);
    EXPECT_GE(pp.apply(w).values().minCoeff(), 0.0);
  }
  const FeFunction s = pp.apply([](const Vec2& x) { return std::abs(std::sin(7.0 * x.x()) * x.y()); });
  EXPECT_GE(s.values().minCoeff(), 0.0);
}

TEST(Pp, SymmetryOnP1) {
  for (Pattern pat : {Pattern::CrissCross, Pattern::Diagonal}) {
    const MeshPtr m = square(5, pat);
    const PpInterpolant pp(m);
    const auto f = [](const Vec2& x) { return 0.3 - 1.7 * x.x() + 2.2 * x.y(); };
    const FeFunction w = pp.apply(FeFunction::interpolate(m, f));
    const FeFunction wf = pp.apply(f);
    for (int v : m->interior_vertices()) {
      EXPECT_NEAR(w[v], f(m->vertex(v)), 1e-9);
      EXPECT_NEAR(wf[v], f(m->vertex(v)), 1e-9);
    }
  }
}

TEST(Pp, LinearityAndLocalInvariance) {
  const MeshPtr m = square(6);
  const PpInterpolant pp(m);
  const FeFunction a = random_fe_function(m, 3), b = random_fe_function(m, 4);
  const VectorX lhs = pp.apply(FeFunction(m, 1.5 * a.values() + 4.0 * b.values())).values();
  const VectorX rhs = 1.5 * pp.apply(a).values() + 4.0 * pp.apply(b).values();
  EXPECT_LE((lhs - rhs).lpNorm<Eigen::Infinity>(), 1e-10);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const auto lin = [](const Vec2& x) { return 1.0 + x.x() - 3.0 * x.y(); };
  int tested = 0;
  for (std::size_t t = 0; t < m->num_cells(); ++t) {
    const Cell& c = m->cell(static_cast<int>(t));
    if (m->is_boundary_vertex(c[0]) || m->is_boundary_vertex(c[1]) || m->is_boundary_vertex(c[2])) continue;
    VectorX vals(m->num_vertices());
    for (Eigen::Index i = 0; i < vals.size(); ++i) vals[i] = U(rng);
    for (int s : patch_of_element(*m, static_cast<int>(t)))
      for (int v : m->cell(s)) vals[v] = lin(m->vertex(v));
    const FeFunction p = pp.apply(FeFunction(m, vals));
    for (int v : c) EXPECT_NEAR(p[v], vals[v], 1e-9);
    ++tested;
  }
  EXPECT_GT(tested, 0);
}

TEST(Stability, SzL1OnFeFunctionsAtMostOne) {
  TestBank bank;
  bank.fields.clear();
  const auto rows = stability_ratio_report(StabilityKind::SZ_L1, {}, family(4, 3), bank);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) EXPECT_LE(r.max_ratio, 1.0 + 1e-9);
}

TEST(Stability, SzWeightedModularLevelStable) {
  StabilityProblem pb;
  pb.phi = make_power(3.0);
  pb.weight = Weight::radial_power(Vec2::Zero(), 0.5);
  const auto rows = stability_ratio_report(StabilityKind::SZ_weighted_modular, pb, family(8, 4), smooth_bank());
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_LE(level_spread(rows), 1.25);
}

TEST(Stability, PpWeightedApproxBounded) {
  StabilityProblem pb;
  pb.weight = Weight::radial_power(Vec2::Zero(), 0.5);
  const auto rows = stability_ratio_report(StabilityKind::PP_weighted_approx, pb, family(8, 4), TestBank::standard());
  for (const auto& r : rows) EXPECT_TRUE(std::isfinite(r.max_ratio));
  EXPECT_LE(level_spread(rows), 1.25);
}

TEST(Stability, PpLpBounded) {
  const auto rows = stability_ratio_report(StabilityKind::PP_Lp, {}, family(8, 3), TestBank::standard());
  for (const auto& r : rows) EXPECT_TRUE(std::isfinite(r.max_ratio));
  EXPECT_LE(level_spread(rows), 1.25);
}

TEST(Stability, SpreadDefinitionAndCsv) {
  std::vector<StabilityRow> rows(3);
  rows[0].max_ratio = 2.0;
  rows[1].max_ratio = 2.5;
  rows[2].max_ratio = 2.2;
  EXPECT_DOUBLE_EQ(level_spread(rows), 1.25);
  std::ostringstream os;
  write_stability_csv(os, rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "level,h,kind,max_ratio,median_ratio");
  for (StabilityKind k : all_stability_kinds()) EXPECT_EQ(stability_kind_from_string(to_string(k)), k);
}

TEST(QuasiBest, Oracles) {
  const auto zero = quasi_best_report(make_power(2.0), Weight::constant(1.0), linear_field(1.0, Vec2(2.0, -1.0)), family(4, 2));
  for (const auto& r : zero) EXPECT_EQ(r.max_ratio, 0.0);
  for (const NFunction& phi : {make_power(2.0), make_power(1.5)}) {
    const auto rows = quasi_best_report(phi, Weight::constant(1.0), sine_field(), family(4, 4));
    double lo = 1e300, hi = 0.0;
    for (const auto& r : rows) {
      EXPECT_TRUE(std::isfinite(r.max_ratio));
      lo = std::min(lo, r.max_ratio);
      hi = std::max(hi, r.max_ratio);
    }
    EXPECT_LE(hi / lo, 2.0) << phi.describe();
  }
}
