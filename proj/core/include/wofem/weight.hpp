#pragma once

#include "wofem/nfunc.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace wofem {

class SimplicialMesh;

enum class WeightKind { Constant, RadialPower, Product, Custom };

/// A positive weight ω on ℝ². Immutable, cheap to copy.
class Weight {
 public:
  static Weight constant(double c);
  /// |x - center|^alpha, with |x - center| floored at `floor`.
  static Weight radial_power(const Vec2& center, double alpha, double floor = 1e-14);
  static Weight product(std::vector<Weight> factors);
  /// Custom evaluation; `singular_points` lists where ω may vanish or blow up.
  static Weight custom(std::string name, std::function<double(const Vec2&)> eval,
                       std::vector<Vec2> singular_points = {});

  double operator()(const Vec2& x) const;
  /// ω(x)^s, evaluated without forming ω(x) first where possible.
  double pow(const Vec2& x, double s) const;
  /// The weight ω^s.
  Weight power(double s) const;

  WeightKind kind() const;
  bool is_constant() const;
  /// Points where ω is singular (radial power centres with alpha != 0).
  std::vector<Vec2> singular_points() const;
  std::string describe() const;

  // Accessors for RadialPower weights.
  Vec2 center() const;
  double alpha() const;

 private:
  struct Data;
  explicit Weight(std::shared_ptr<const Data> d);
  std::shared_ptr<const Data> d_;
};

struct Ball {
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
};

/// Finite surrogate for "every ball": seeded random balls plus balls centred
/// at (and just off) the weight's singular points.
struct BallSampler {
  Vec2 box_lo{-1.0, -1.0};
  Vec2 box_hi{1.0, 1.0};
  int n_balls = 500;
  double min_radius_fraction = 1e-3;  ///< smallest radius as a fraction of diam(box)
  int singular_radii = 16;            ///< radii per singular point
  int radial_points = 32;
  int angular_points = 64;
  std::uint64_t seed = 20240611;

  std::vector<Ball> balls(const Weight& w) const;
};

/// Integral over a ball at two excision levels. When a singular point lies in
/// the ball, a polar rule centred there integrates radially over geometric
/// panels down to 1e-6 (coarse) and 1e-18 (fine) times the ray length.
struct BallIntegral {
  std::vector<double> coarse;
  std::vector<double> fine;
  bool singular = false;
  /// Contribution of the decade [1e-12, 1e-11]·R over the next one out. For a local power
  /// r^β this is 10^{-(β+2)}, so values >= 1 mean a non-integrable singularity.
  std::vector<double> tail_ratio;
};

/// Integrates k functions at once; f(x, out) writes the k values at x.
BallIntegral integrate_ball(const Ball& b, const std::vector<Vec2>& singular_points, int k,
                            const std::function<void(const Vec2&, double*)>& f,
                            int radial_points = 32, int angular_points = 64);

inline constexpr double kTailThreshold = 0.999;

struct ApDiagnostics {
  double p = 2.0;
  double characteristic = 1.0;         ///< sup over balls, fine excision
  double coarse_characteristic = 1.0;  ///< sup over balls, coarse excision
  bool growth_flag = false;            ///< fine / coarse > 1.5, or a non-decaying tail
  bool divergent = false;              ///< non-finite values met
  bool nonintegrable_tail = false;     ///< ω or ω^{-1/(p-1)} tail ratio >= kTailThreshold
  std::size_t balls = 0;
  Ball worst_ball;
};

ApDiagnostics ap_characteristic(const Weight& w, double p, const BallSampler& s);

/// Left side of the A_Φ condition at one ball and one δ.
struct AphiResult {
  double direct = 1.0;
  double direct_coarse = 1.0;
  bool direct_growth = false;
  double i_phi = 0.0;
  ApDiagnostics indirect;
  bool delta2_ok = true;  ///< Φ and Φ* pass the Δ₂ estimate
  bool verdict = false;
  bool inconsistent = false;
  std::vector<double> deltas;
};

AphiResult is_A_Phi(const Weight& w, const NFunction& phi, const BallSampler& s);

struct BphiResult {
  bool finite = false;
  double value = 0.0;  ///< minimal sampled value over μ
  double best_mu = 0.0;
  std::vector<double> mus;
  std::vector<double> values;  ///< fine excision, per μ
};

BphiResult check_B_Phi(const Weight& w, const NFunction& phi, const Ball& b, int radial_points = 32,
                       int angular_points = 64);

struct ApOmegaResult {
  bool verdict = false;
  double omega_lower = 0.0;     ///< sampled inf over the collar
  double modulus = 0.0;         ///< sampled Lipschitz bound over the collar
  double omega_lower_fine = 0.0;
  double modulus_fine = 0.0;
};

/// Collar check near ∂Ω: ω bounded below and uniformly continuous on
/// {dist(x, ∂Ω) < eps}, sampled on a grid of n×n and (4n)×(4n) cell centres.
ApOmegaResult is_A_p_Omega(const Weight& w, const SimplicialMesh& m, double p, double eps, int n = 100);

/// ∫ ω over the given cells (all cells when empty).
double measure(const Weight& w, const SimplicialMesh& m, const std::vector<int>& cells = {},
               int degree = 6);

}  // namespace wofem
