#include "wofem/errors.hpp"
#include "wofem/mesh.hpp"
#include "wofem/weight.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace wofem;

namespace {

BallSampler unit_box_sampler(int n = 200) {
  BallSampler s;
  s.n_balls = n;
  return s;
}

}  // namespace

TEST(Weight, Evaluation) {
  EXPECT_EQ(Weight::constant(2.5)(Vec2(3.0, -1.0)), 2.5);
  EXPECT_THROW(Weight::constant(0.0), DomainError);
  const Weight r = Weight::radial_power(Vec2(1.0, 0.0), 0.5);
  EXPECT_NEAR(r(Vec2(1.0, 4.0)), 2.0, 1e-15);
  EXPECT_NEAR(r.pow(Vec2(1.0, 4.0), -2.0), 0.25, 1e-15);
  // floored at the centre
  EXPECT_GT(Weight::radial_power(Vec2::Zero(), -1.0)(Vec2::Zero()), 0.0);
  EXPECT_TRUE(std::isfinite(Weight::radial_power(Vec2::Zero(), -1.0)(Vec2::Zero())));
  const Weight p = Weight::product({Weight::constant(3.0), r});
  EXPECT_NEAR(p(Vec2(1.0, 4.0)), 6.0, 1e-14);
  EXPECT_EQ(p.singular_points().size(), 1u);
  EXPECT_TRUE(Weight::radial_power(Vec2::Zero(), 0.0).singular_points().empty());
}

TEST(Sampler, DeterministicAndIntersectsBox) {
  const Weight w = Weight::radial_power(Vec2(0.2, 0.1), -1.0);
  const BallSampler s = unit_box_sampler();
  const auto a = s.balls(w), b = s.balls(w);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].center, b[i].center);
    EXPECT_EQ(a[i].radius, b[i].radius);
    const Vec2 c = a[i].center.cwiseMax(s.box_lo).cwiseMin(s.box_hi);
    EXPECT_LE((c - a[i].center).norm(), a[i].radius);
  }
  EXPECT_GE(a.size(), static_cast<std::size_t>(s.n_balls));
}

TEST(Ap, ConstantWeightHasCharacteristicOne) {
  for (double c : {1.0, 7.0}) {
    for (double p : {1.5, 2.0, 3.0}) {
      const ApDiagnostics d = ap_characteristic(Weight::constant(c), p, unit_box_sampler(100));
      EXPECT_NEAR(d.characteristic, 1.0, 1e-6);
      EXPECT_FALSE(d.growth_flag);
    }
  }
}

TEST(Ap, PowerWeightInA2) {
  const ApDiagnostics d = ap_characteristic(Weight::radial_power(Vec2::Zero(), 1.0), 2.0, unit_box_sampler());
  EXPECT_TRUE(std::isfinite(d.characteristic));
  EXPECT_GE(d.characteristic, 1.0);
  EXPECT_FALSE(d.growth_flag);
  EXPECT_LT(d.characteristic, 1.5 * d.coarse_characteristic);
}

TEST(Ap, PowerWeightOutsideA2IsFlagged) {
  for (double alpha : {-2.5, 2.5}) {
    const ApDiagnostics d = ap_characteristic(Weight::radial_power(Vec2::Zero(), alpha), 2.0, unit_box_sampler());
    EXPECT_TRUE(d.growth_flag) << alpha;
  }
}

TEST(Ap, EndpointsFlaggedNearEndpointsNot) {
  // log-divergent at α = -2 (ω) and α = 2(p-1) (ω^{-1/(p-1)})
  const BallSampler s = unit_box_sampler();
  EXPECT_TRUE(ap_characteristic(Weight::radial_power(Vec2::Zero(), 1.0), 1.5, s).nonintegrable_tail);
  EXPECT_TRUE(ap_characteristic(Weight::radial_power(Vec2::Zero(), -2.0), 2.0, s).growth_flag);
  EXPECT_TRUE(ap_characteristic(Weight::radial_power(Vec2::Zero(), 2.0), 2.0, s).growth_flag);
  EXPECT_FALSE(ap_characteristic(Weight::radial_power(Vec2::Zero(), 1.9), 2.0, s).growth_flag);
  EXPECT_FALSE(ap_characteristic(Weight::radial_power(Vec2::Zero(), -1.9), 2.0, s).growth_flag);
}

TEST(Sampler, TailRatioOfPowers) {
  for (double beta : {-1.5, -1.0, 0.0, 1.0}) {
    const Ball b{Vec2::Zero(), 1.0};
    const BallIntegral I = integrate_ball(b, {Vec2::Zero()}, 1,
                                          [&](const Vec2& x, double* out) { out[0] = std::pow(x.norm(), beta); });
    ASSERT_EQ(I.tail_ratio.size(), 1u);
    EXPECT_NEAR(I.tail_ratio[0], std::pow(10.0, -(beta + 2.0)), 1e-12 * std::pow(10.0, -(beta + 2.0))) << beta;
  }
}

TEST(Ap, Duality) {
  const Weight w = Weight::radial_power(Vec2::Zero(), 0.7);
  const double p = 3.0, q = 1.5;
  const BallSampler s = unit_box_sampler(100);
  const double a = ap_characteristic(w, p, s).characteristic;
  const double b = ap_characteristic(w.power(-1.0 / (p - 1.0)), q, s).characteristic;
  EXPECT_NEAR(a, std::pow(b, p - 1.0), 1e-6 * a);
}

TEST(Ap, NonincreasingInP) {
  const Weight w = Weight::radial_power(Vec2::Zero(), 1.0);
  const BallSampler s = unit_box_sampler(100);
  double prev = std::numeric_limits<double>::infinity();
  for (double p : {1.6, 2.0, 3.0, 4.0}) {
    const double c = ap_characteristic(w, p, s).characteristic;
    EXPECT_LE(c, 1.05 * prev) << p;
    prev = c;
  }
}

TEST(APhi, ConstantWeight) {
  for (const NFunction& phi : {make_power(1.5), make_shifted_power(3.0, 0.1)}) {
    const AphiResult r = is_A_Phi(Weight::constant(1.0), phi, unit_box_sampler(50));
    EXPECT_TRUE(r.verdict);
    EXPECT_NEAR(r.direct, 1.0, 1e-6);
    EXPECT_FALSE(r.inconsistent);
  }
}

TEST(APhi, PowerPhiScoresAgree) {
  const AphiResult r = is_A_Phi(Weight::radial_power(Vec2::Zero(), 0.5), make_power(2.0), unit_box_sampler());
  EXPECT_NEAR(r.direct / r.indirect.characteristic, 1.0, 0.2);
  EXPECT_TRUE(r.verdict);
}

TEST(APhi, ClassicalCriterionForPhi4) {
  const BallSampler s = unit_box_sampler(100);
  for (double alpha : {-1.5, 1.0, 5.0}) {
    const AphiResult r = is_A_Phi(Weight::radial_power(Vec2::Zero(), alpha), make_power(4.0), s);
    EXPECT_TRUE(r.verdict) << alpha;
    EXPECT_FALSE(r.inconsistent) << alpha;
  }
  for (double alpha : {-2.5, 7.0}) {
    const AphiResult r = is_A_Phi(Weight::radial_power(Vec2::Zero(), alpha), make_power(4.0), s);
    EXPECT_FALSE(r.verdict) << alpha;
    EXPECT_TRUE(r.indirect.growth_flag) << alpha;
    EXPECT_FALSE(r.inconsistent) << alpha;
  }
}

TEST(BPhi, ConstantWeightFinite) {
  const BphiResult b = check_B_Phi(Weight::constant(1.0), make_power(2.0), Ball{Vec2::Zero(), 1.0});
  EXPECT_TRUE(b.finite);
  for (double v : b.values) EXPECT_TRUE(std::isfinite(v));
}

TEST(BPhi, PowerPhiComparableToDualIntegral) {
  // For Φ_p the minimum over μ is ≃ (∫_B ω^{-1/(p-1)})^{(p-1)/p} ... up to constants;
  // check the ratio stays in a fixed window as the weight changes.
  const double p = 2.0;
  const Ball b{Vec2::Zero(), 0.5};
  double lo = 1e300, hi = 0.0;
  for (double alpha : {-1.0, 0.0, 0.5, 1.0}) {
    const Weight w = Weight::radial_power(Vec2::Zero(), alpha);
    const BphiResult r = check_B_Phi(w, make_power(p), b);
    const BallIntegral I = integrate_ball(b, w.singular_points(), 1,
                                          [&](const Vec2& x, double* out) { out[0] = w.pow(x, -1.0 / (p - 1.0)); });
    const double ratio = r.value / std::sqrt(I.fine[0]);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  EXPECT_LT(hi / lo, 5.0);
}

TEST(BPhi, APhiImpliesBPhi) {
  const Weight w = Weight::radial_power(Vec2::Zero(), -1.0);
  const NFunction phi = make_power(3.0);
  const BallSampler s = unit_box_sampler(30);
  ASSERT_TRUE(is_A_Phi(w, phi, s).verdict);
  for (const Ball& b : s.balls(w)) EXPECT_TRUE(check_B_Phi(w, phi, b, 16, 32).finite);
}

TEST(ApOmega, Collar) {
  const SimplicialMesh m = structured_rect(4, 4);
  const ApOmegaResult one = is_A_p_Omega(Weight::constant(1.0), m, 2.0, 0.1);
  EXPECT_TRUE(one.verdict);
  EXPECT_NEAR(one.omega_lower_fine, 1.0, 1e-15);
  EXPECT_TRUE(is_A_p_Omega(Weight::radial_power(Vec2(0.5, 0.5), -1.0), m, 2.0, 0.1).verdict);
  const ApOmegaResult bad = is_A_p_Omega(Weight::radial_power(Vec2(0.5, 0.0), 1.0), m, 2.0, 0.1);
  EXPECT_FALSE(bad.verdict);
  EXPECT_LT(bad.omega_lower_fine, bad.omega_lower);
}

TEST(Measure, Oracles) {
  const SimplicialMesh m = structured_rect(5, 3);
  EXPECT_NEAR(measure(Weight::constant(1.0), m), 1.0, 1e-12);
  EXPECT_NEAR(measure(Weight::constant(3.0), m, {0, 1, 2}), 3.0 * (m.area(0) + m.area(1) + m.area(2)), 1e-13);
  // ∫_{[0,1]²} |x| = (√2 + asinh(1)) / 3
  const double exact = (std::sqrt(2.0) + std::asinh(1.0)) / 3.0;
  const double q = measure(Weight::radial_power(Vec2::Zero(), 1.0), m);
  EXPECT_NEAR(q, exact, 1e-6);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double mc = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) mc += Vec2(U(rng), U(rng)).norm();
  mc /= n;
  EXPECT_NEAR(q / mc, 1.0, 1e-3);
}
