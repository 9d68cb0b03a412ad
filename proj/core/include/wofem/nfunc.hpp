#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wofem {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class Family { Power, ShiftedPower, Shifted, Conjugate, Psi, Custom };

std::string to_string(Family f);

/// Sampled bounds of Φ'(t) / (tΦ''(t)) over the log grid t ∈ [1e-8, 1e8].
struct Characteristics {
  double lower = 0.0;
  double upper = 0.0;
};

/// How derived N-functions (conjugates, shifts) are evaluated. `Auto` takes
/// closed forms where the family admits one; `Numeric` always integrates and
/// inverts numerically, which is what the double-transform checks exercise.
enum class Evaluation { Auto, Numeric };

/// An N-function Φ together with Φ' and Φ''. Immutable and cheap to copy;
/// safe to share between threads.
class NFunction {
 public:
  class Impl;

  explicit NFunction(std::shared_ptr<const Impl> impl);

  double operator()(double t) const { return phi(t); }
  double phi(double t) const;
  double dphi(double t) const;
  double ddphi(double t) const;
  /// Generalized inverse (Φ')^{-1}(y) = sup{s : Φ'(s) <= y}.
  double inverse_dphi(double y) const;

  Family family() const;
  /// Exponent p of power-type families; NaN otherwise.
  double p() const;
  /// κ of the shifted power family (0 for plain powers); NaN otherwise.
  double kappa() const;
  /// Shift a of `Shifted` functions; 0 otherwise.
  double shift_parameter() const;
  /// Underlying function of Shifted / Conjugate / Psi, if any.
  std::optional<NFunction> base() const;
  /// Set when Φ belongs to a family known to satisfy Φ'(t) ≃ tΦ''(t).
  const std::optional<Characteristics>& characteristics() const;
  /// If Φ (with any shift) is a member of the shifted power family Φ_{p,κ},
  /// returns (p, κ); used for closed-form fast paths.
  std::optional<std::pair<double, double>> power_form() const;

  std::string describe() const;

 private:
  std::shared_ptr<const Impl> impl_;
};

/// Φ_p(t) = t^p / p.
NFunction make_power(double p);

/// Φ_{p,κ}(t) = ∫_0^t (κ + s)^{p-2} s ds.
NFunction make_shifted_power(double p, double kappa);

/// User-provided Φ with its derivatives. No characteristics are assumed.
NFunction make_custom(std::string name, std::function<double(double)> phi,
                      std::function<double(double)> dphi, std::function<double(double)> ddphi);

/// Complementary function Φ*, with (Φ*)' = (Φ')^{-1}.
NFunction conjugate(const NFunction& phi, Evaluation mode = Evaluation::Auto);

/// Shifted function Φ_a with Φ_a'(t) = Φ'(a + t) t / (a + t).
NFunction shift(const NFunction& phi, double a, Evaluation mode = Evaluation::Auto);

/// Ψ with Ψ'(t) = sqrt(t Φ'(t)); generates the field V.
NFunction psi(const NFunction& phi);

/// Samples Φ'(t) / (tΦ''(t)) on the standard grid.
Characteristics sample_characteristics(const NFunction& phi);

/// Log-spaced grid with n points on [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);

// -- indices and Δ₂ -------------------------------------------------------

struct IndexEstimate {
  double i_lower = 0.0;
  double I_upper = 0.0;
  bool divergent = false;
  double t_min = 1e-8;
  double t_max = 1e8;
  int t_points = 200;
  std::vector<double> small_lambdas;
  std::vector<double> large_lambdas;
};

/// Lower and upper growth indices from the sup ratio h(λ) = max_t Φ(λt)/Φ(t).
IndexEstimate estimate_indices(const NFunction& phi);

struct Delta2Estimate {
  double value = 0.0;          ///< sup_t Φ(2t)/Φ(t) on 200 log points in [1e-8, 1e8]
  double refined_value = 0.0;  ///< same with 400 points
  double extended_value = 0.0; ///< same on [1e-12, 1e12]
  bool divergent = false;
};

Delta2Estimate estimate_delta2(const NFunction& phi);

// -- vector fields --------------------------------------------------------

/// A(ζ) = Φ'(|ζ|) ζ / |ζ|, A(0) = 0.
Vec2 vector_A(const NFunction& phi, const Vec2& zeta);

/// V(ζ) = Ψ'(|ζ|) ζ / |ζ| with Ψ'(t) = sqrt(tΦ'(t)), V(0) = 0.
Vec2 vector_V(const NFunction& phi, const Vec2& zeta);

/// Jacobian DA(ζ) = Φ''(|ζ|) P + Φ'(|ζ|)/|ζ| (I - P), P = ζζᵀ/|ζ|². At ζ = 0
/// the limit of Φ'(t)/t is used, floored to eps_reg when it is 0 or ∞.
Mat2 linearized_A(const NFunction& phi, const Vec2& zeta, double eps_reg = 1e-10);

/// Jacobian of V, same structure with Ψ in place of Φ.
Mat2 linearized_V(const NFunction& phi, const Vec2& zeta, double eps_reg = 1e-10);

/// Quantities compared by the structural equivalences for a pair (ζ, η).
struct StructuralSample {
  double monotonicity = 0.0;  ///< (A(ζ) - A(η))·(ζ - η)
  double v_gap = 0.0;         ///< |V(ζ) - V(η)|²
  double shifted_zeta = 0.0;  ///< Φ_{|ζ|}(|ζ - η|)
  double shifted_eta = 0.0;   ///< Φ_{|η|}(|ζ - η|)
  double hessian = 0.0;       ///< Φ''(|ζ| + |η|) |ζ - η|²
  double a_gap = 0.0;         ///< |A(ζ) - A(η)|
  double shifted_dphi = 0.0;  ///< Φ'_{|ζ|}(|ζ - η|)
};

StructuralSample structural_sample(const NFunction& phi, const Vec2& zeta, const Vec2& eta);

// -- invariant checks -----------------------------------------------------

struct NFunctionCheck {
  bool zero_at_origin = false;
  bool derivative_zero_at_origin = false;
  bool derivative_monotone = false;
  bool derivative_unbounded = false;
  bool midpoint_convex = false;
  bool characteristics_hold = true;  ///< vacuous when no characteristics declared
  bool ok() const {
    return zero_at_origin && derivative_zero_at_origin && derivative_monotone &&
           derivative_unbounded && midpoint_convex && characteristics_hold;
  }
};

/// Checks the N-function axioms on the log grid t ∈ [1e-8, 1e8].
NFunctionCheck check_nfunction(const NFunction& phi);

}  // namespace wofem
