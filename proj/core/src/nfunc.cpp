#include "wofem/nfunc.hpp"

#include "wofem/errors.hpp"
#include "wofem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

namespace wofem {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kQuadTol = 1e-10;

void require_nonnegative(double t, const char* what) {
  if (!(t >= 0.0)) throw DomainError(std::string(what) + ": argument must be >= 0");
}

/// Solves f(s) = y for increasing f with f(0) = 0. Keeps a bracket
/// f(lo) < y <= f(hi) and takes Newton steps only when they stay inside it.
double invert_increasing(const std::function<double(double)>& f,
                         const std::function<double(double)>& df, double y) {
  if (!(y >= 0.0)) throw DomainError("inverse derivative: argument must be >= 0");
  if (y == 0.0) return 0.0;
  if (!std::isfinite(y)) throw RangeError("inverse derivative: non-finite argument");

  double lo = 0.0;
  double hi = 1.0;
  if (f(hi) < y) {
    while (f(hi) < y) {
      lo = hi;
      hi *= 4.0;
      if (hi > 1e300) throw RangeError("inverse derivative: argument outside supported range");
    }
  } else {
    while (f(0.25 * hi) >= y) {
      hi *= 0.25;
      if (hi < 1e-300) throw RangeError("inverse derivative: argument outside supported range");
    }
    lo = 0.25 * hi;
  }

  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    const double fx = f(x) - y;
    if (fx == 0.0) return x;
    if (fx < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double d = df(x);
    double next = x - fx / d;
    if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * x || hi - lo <= 4e-16 * hi) return next;
    x = next;
  }
  return x;
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::Power: return "power";
    case Family::ShiftedPower: return "shifted_power";
    case Family::Shifted: return "shifted";
    case Family::Conjugate: return "conjugate";
    case Family::Psi: return "psi";
    case Family::Custom: return "custom";
  }
  return "unknown";
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * i / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

// ---------------------------------------------------------------------------

class NFunction::Impl {
 public:
  virtual ~Impl() = default;

  virtual double phi(double t) const = 0;
  virtual double dphi(double t) const = 0;
  virtual double ddphi(double t) const = 0;
  virtual double inverse_dphi(double y) const {
    return invert_increasing([this](double s) { return dphi(s); },
                             [this](double s) { return ddphi(s); }, y);
  }
  virtual Family family() const = 0;
  virtual double p() const { return kNaN; }
  virtual double kappa() const { return kNaN; }
  virtual double shift() const { return 0.0; }
  virtual std::optional<NFunction> base() const { return std::nullopt; }
  virtual std::optional<std::pair<double, double>> power_form() const { return std::nullopt; }
  virtual std::string describe() const = 0;
  /// Whether the family satisfies the structural assumption Φ' ≃ tΦ''.
  virtual bool structured() const { return false; }

  const std::optional<Characteristics>& characteristics(const NFunction& self) const {
    std::call_once(char_once_, [&] {
      if (structured()) char_ = sample_characteristics(self);
    });
    return char_;
  }

 private:
  mutable std::once_flag char_once_;
  mutable std::optional<Characteristics> char_;
};

namespace {

/// Φ_{p,κ}; κ = 0 gives Φ_p.
class ShiftedPowerImpl final : public NFunction::Impl {
 public:
  ShiftedPowerImpl(double p, double kappa, Family tag) : p_(p), kappa_(kappa), tag_(tag) {}

  double phi(double t) const override {
    require_nonnegative(t, "phi");
    if (t == 0.0) return 0.0;
    if (kappa_ == 0.0) return std::pow(t, p_) / p_;
    if (p_ == 2.0) return 0.5 * t * t;
    if (t >= kappa_) {
      // ∫_κ^{κ+t} u^{p-2}(u - κ) du in closed form; no severe cancellation here.
      const double u = kappa_ + t;
      return (std::pow(u, p_) - std::pow(kappa_, p_)) / p_ -
             kappa_ * (std::pow(u, p_ - 1.0) - std::pow(kappa_, p_ - 1.0)) / (p_ - 1.0);
    }
    // The integrand is analytic on a disk of radius κ > t around [0, t].
    static const GaussRule1D rule = gauss_legendre(20);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * dphi(t * rule.nodes[i]);
    return t * sum;
  }

  double dphi(double t) const override {
    require_nonnegative(t, "dphi");
    if (t == 0.0) return 0.0;
    if (p_ == 2.0) return t;
    return std::pow(kappa_ + t, p_ - 2.0) * t;
  }

  double ddphi(double t) const override {
    require_nonnegative(t, "ddphi");
    if (p_ == 2.0) return 1.0;
    if (t == 0.0) {
      if (kappa_ > 0.0) return std::pow(kappa_, p_ - 2.0);
      return p_ < 2.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    return std::pow(kappa_ + t, p_ - 3.0) * (kappa_ + (p_ - 1.0) * t);
  }

  double inverse_dphi(double y) const override {
    if (!(y >= 0.0)) throw DomainError("inverse derivative: argument must be >= 0");
    if (p_ == 2.0) return y;
    if (kappa_ == 0.0) return std::pow(y, 1.0 / (p_ - 1.0));
    return Impl::inverse_dphi(y);
  }

  Family family() const override { return tag_; }
  double p() const override { return p_; }
  double kappa() const override { return kappa_; }
  std::optional<std::pair<double, double>> power_form() const override {
    return std::make_pair(p_, kappa_);
  }
  bool structured() const override { return true; }
  std::string describe() const override {
    std::ostringstream os;
    if (tag_ == Family::Power) {
      os << "Phi_p(p=" << p_ << ")";
    } else {
      os << "Phi_p_kappa(p=" << p_ << ",kappa=" << kappa_ << ")";
    }
    return os.str();
  }

 private:
  double p_;
  double kappa_;
  Family tag_;
};

class ShiftedImpl final : public NFunction::Impl {
 public:
  ShiftedImpl(NFunction base, double a, bool numeric) : base_(std::move(base)), a_(a) {
    if (!numeric) {
      if (auto pf = base_.power_form()) fast_.emplace(pf->first, pf->second + a_, Family::ShiftedPower);
    }
  }

  double phi(double t) const override {
    if (fast_) return fast_->phi(t);
    require_nonnegative(t, "phi");
    if (t == 0.0) return 0.0;
    return integrate_adaptive([this](double s) { return dphi(s); }, 0.0, t, kQuadTol);
  }
  double dphi(double t) const override {
    if (fast_) return fast_->dphi(t);
    require_nonnegative(t, "dphi");
    if (t == 0.0) return 0.0;
    return base_.dphi(a_ + t) * t / (a_ + t);
  }
  double ddphi(double t) const override {
    if (fast_) return fast_->ddphi(t);
    require_nonnegative(t, "ddphi");
    if (t == 0.0) return base_.dphi(a_) / a_;
    const double s = a_ + t;
    return base_.ddphi(s) * t / s + base_.dphi(s) * a_ / (s * s);
  }
  double inverse_dphi(double y) const override {
    if (fast_) return fast_->inverse_dphi(y);
    return Impl::inverse_dphi(y);
  }

  Family family() const override { return Family::Shifted; }
  double p() const override { return base_.p(); }
  double kappa() const override { return base_.kappa(); }
  double shift() const override { return a_; }
  std::optional<NFunction> base() const override { return base_; }
  std::optional<std::pair<double, double>> power_form() const override {
    if (auto pf = base_.power_form()) return std::make_pair(pf->first, pf->second + a_);
    return std::nullopt;
  }
  bool structured() const override { return base_.characteristics().has_value(); }
  std::string describe() const override {
    std::ostringstream os;
    os << "shift(" << base_.describe() << ",a=" << a_ << ")";
    return os.str();
  }

 private:
  NFunction base_;
  double a_;
  std::optional<ShiftedPowerImpl> fast_;
};

class ConjugateImpl final : public NFunction::Impl {
 public:
  ConjugateImpl(NFunction base, bool numeric) : base_(std::move(base)), numeric_(numeric) {
    if (!numeric_) {
      if (auto pf = base_.power_form(); pf && pf->second == 0.0) conj_exponent_ = pf->first / (pf->first - 1.0);
    }
  }

  double phi(double t) const override {
    require_nonnegative(t, "phi");
    if (t == 0.0) return 0.0;
    if (conj_exponent_) return std::pow(t, *conj_exponent_) / *conj_exponent_;
    if (!numeric_) {
      // Equality case of Young's inequality.
      const double s = base_.inverse_dphi(t);
      return t * s - base_.phi(s);
    }
    return integrate_adaptive([this](double s) { return dphi(s); }, 0.0, t, kQuadTol);
  }
  double dphi(double t) const override {
    require_nonnegative(t, "dphi");
    return base_.inverse_dphi(t);
  }
  double ddphi(double t) const override {
    require_nonnegative(t, "ddphi");
    return 1.0 / base_.ddphi(base_.inverse_dphi(t));
  }
  double inverse_dphi(double y) const override {
    if (!numeric_) {
      require_nonnegative(y, "inverse derivative");
      return base_.dphi(y);
    }
    return Impl::inverse_dphi(y);
  }

  Family family() const override { return Family::Conjugate; }
  std::optional<NFunction> base() const override { return base_; }
  bool structured() const override { return base_.characteristics().has_value(); }
  std::string describe() const override { return "conj(" + base_.describe() + ")"; }

 private:
  NFunction base_;
  bool numeric_;
  std::optional<double> conj_exponent_;
};

class PsiImpl final : public NFunction::Impl {
 public:
  explicit PsiImpl(NFunction base) : base_(std::move(base)) {
    if (auto pf = base_.power_form()) fast_.emplace(0.5 * pf->first + 1.0, pf->second, Family::ShiftedPower);
  }

  double phi(double t) const override {
    if (fast_) return fast_->phi(t);
    require_nonnegative(t, "phi");
    if (t == 0.0) return 0.0;
    return integrate_adaptive([this](double s) { return dphi(s); }, 0.0, t, kQuadTol);
  }
  double dphi(double t) const override {
    if (fast_) return fast_->dphi(t);
    require_nonnegative(t, "dphi");
    return std::sqrt(t * base_.dphi(t));
  }
  double ddphi(double t) const override {
    if (fast_) return fast_->ddphi(t);
    require_nonnegative(t, "ddphi");
    if (t == 0.0) return std::sqrt(base_.ddphi(0.0));
    const double d1 = base_.dphi(t);
    return (d1 + t * base_.ddphi(t)) / (2.0 * std::sqrt(t * d1));
  }
  double inverse_dphi(double y) const override {
    if (fast_) return fast_->inverse_dphi(y);
    return Impl::inverse_dphi(y);
  }

  Family family() const override { return Family::Psi; }
  double p() const override { return base_.p(); }
  double kappa() const override { return base_.kappa(); }
  std::optional<NFunction> base() const override { return base_; }
  bool structured() const override { return base_.characteristics().has_value(); }
  std::string describe() const override { return "psi(" + base_.describe() + ")"; }

 private:
  NFunction base_;
  std::optional<ShiftedPowerImpl> fast_;
};

class CustomImpl final : public NFunction::Impl {
 public:
  CustomImpl(std::string name, std::function<double(double)> phi, std::function<double(double)> dphi,
             std::function<double(double)> ddphi)
      : name_(std::move(name)), phi_(std::move(phi)), dphi_(std::move(dphi)), ddphi_(std::move(ddphi)) {}

  double phi(double t) const override {
    require_nonnegative(t, "phi");
    return phi_(t);
  }
  double dphi(double t) const override {
    require_nonnegative(t, "dphi");
    return dphi_(t);
  }
  double ddphi(double t) const override {
    require_nonnegative(t, "ddphi");
    return ddphi_(t);
  }
  Family family() const override { return Family::Custom; }
  std::string describe() const override { return "custom(" + name_ + ")"; }

 private:
  std::string name_;
  std::function<double(double)> phi_;
  std::function<double(double)> dphi_;
  std::function<double(double)> ddphi_;
};

}  // namespace

// ---------------------------------------------------------------------------

NFunction::NFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

double NFunction::phi(double t) const { return impl_->phi(t); }
double NFunction::dphi(double t) const { return impl_->dphi(t); }
double NFunction::ddphi(double t) const { return impl_->ddphi(t); }
double NFunction::inverse_dphi(double y) const { return impl_->inverse_dphi(y); }
Family NFunction::family() const { return impl_->family(); }
double NFunction::p() const { return impl_->p(); }
double NFunction::kappa() const { return impl_->kappa(); }
double NFunction::shift_parameter() const { return impl_->shift(); }
std::optional<NFunction> NFunction::base() const { return impl_->base(); }
const std::optional<Characteristics>& NFunction::characteristics() const {
  return impl_->characteristics(*this);
}
std::optional<std::pair<double, double>> NFunction::power_form() const { return impl_->power_form(); }
std::string NFunction::describe() const { return impl_->describe(); }

NFunction make_power(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("make_power: p must lie in (1, inf)");
  return NFunction(std::make_shared<ShiftedPowerImpl>(p, 0.0, Family::Power));
}

NFunction make_shifted_power(double p, double kappa) {
  if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("make_shifted_power: p must lie in (1, inf)");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw DomainError("make_shifted_power: kappa must be >= 0");
  return NFunction(std::make_shared<ShiftedPowerImpl>(p, kappa, Family::ShiftedPower));
}

NFunction make_custom(std::string name, std::function<double(double)> phi,
                      std::function<double(double)> dphi, std::function<double(double)> ddphi) {
  return NFunction(std::make_shared<CustomImpl>(std::move(name), std::move(phi), std::move(dphi),
                                                std::move(ddphi)));
}

NFunction conjugate(const NFunction& phi, Evaluation mode) {
  return NFunction(std::make_shared<ConjugateImpl>(phi, mode == Evaluation::Numeric));
}

NFunction shift(const NFunction& phi, double a, Evaluation mode) {
  if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("shift: a must be >= 0");
  if (a == 0.0) return phi;
  return NFunction(std::make_shared<ShiftedImpl>(phi, a, mode == Evaluation::Numeric));
}

NFunction psi(const NFunction& phi) { return NFunction(std::make_shared<PsiImpl>(phi)); }

Characteristics sample_characteristics(const NFunction& phi) {
  Characteristics c{std::numeric_limits<double>::infinity(), 0.0};
  for (double t : log_grid(1e-8, 1e8, 200)) {
    const double r = phi.dphi(t) / (t * phi.ddphi(t));
    if (!std::isfinite(r)) continue;
    c.lower = std::min(c.lower, r);
    c.upper = std::max(c.upper, r);
  }
  return c;
}

// ---------------------------------------------------------------------------

namespace {

double sup_ratio(const NFunction& phi, const std::vector<double>& grid, double lambda) {
  double best = 0.0;
  for (double t : grid) {
    const double den = phi.phi(t);
    const double num = phi.phi(lambda * t);
    const double r = num / den;
    if (std::isnan(r) || std::isinf(r)) return std::numeric_limits<double>::infinity();
    best = std::max(best, r);
  }
  return best;
}

double loglog_slope(const std::vector<double>& lambdas, const std::vector<double>& values) {
  const std::size_t n = lambdas.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(lambdas[i]);
    const double y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

Delta2Estimate estimate_delta2(const NFunction& phi) {
  Delta2Estimate d;
  d.value = sup_ratio(phi, log_grid(1e-8, 1e8, 200), 2.0);
  d.refined_value = sup_ratio(phi, log_grid(1e-8, 1e8, 400), 2.0);
  d.extended_value = sup_ratio(phi, log_grid(1e-12, 1e12, 300), 2.0);
  d.divergent = !std::isfinite(d.value) || !std::isfinite(d.extended_value) ||
                d.extended_value > 1.5 * d.value;
  return d;
}

IndexEstimate estimate_indices(const NFunction& phi) {
  IndexEstimate est;
  est.small_lambdas = {1e-3, 1e-4, 1e-5};
  est.large_lambdas = {1e3, 1e4, 1e5};
  const auto grid = log_grid(est.t_min, est.t_max, est.t_points);

  const Delta2Estimate d2 = estimate_delta2(phi);
  if (d2.divergent) {
    est.divergent = true;
    est.i_lower = kNaN;
    est.I_upper = std::numeric_limits<double>::infinity();
    return est;
  }

  std::vector<double> hs;
  for (double l : est.small_lambdas) hs.push_back(sup_ratio(phi, grid, l));
  est.i_lower = loglog_slope(est.small_lambdas, hs);

  std::vector<double> hl;
  for (double l : est.large_lambdas) hl.push_back(sup_ratio(phi, grid, l));
  est.I_upper = loglog_slope(est.large_lambdas, hl);
  if (!std::isfinite(est.I_upper)) est.divergent = true;
  return est;
}

// ---------------------------------------------------------------------------

Vec2 vector_A(const NFunction& phi, const Vec2& zeta) {
  const double t = zeta.norm();
  if (t == 0.0) return Vec2::Zero();
  return (phi.dphi(t) / t) * zeta;
}

Vec2 vector_V(const NFunction& phi, const Vec2& zeta) {
  const double t = zeta.norm();
  if (t == 0.0) return Vec2::Zero();
  return std::sqrt(phi.dphi(t) / t) * zeta;
}

namespace {

double regularized(double v, double eps_reg) {
  if (!std::isfinite(v) || v < eps_reg) return eps_reg;
  return v;
}

Mat2 radial_jacobian(double radial, double tangential, const Vec2& zeta, double t) {
  const Vec2 e = zeta / t;
  const Mat2 P = e * e.transpose();
  return radial * P + tangential * (Mat2::Identity() - P);
}

}  // namespace

Mat2 linearized_A(const NFunction& phi, const Vec2& zeta, double eps_reg) {
  const double t = zeta.norm();
  if (t == 0.0) return regularized(phi.ddphi(0.0), eps_reg) * Mat2::Identity();
  const double radial = std::max(phi.ddphi(t), eps_reg);
  const double tangential = std::max(phi.dphi(t) / t, eps_reg);
  return radial_jacobian(radial, tangential, zeta, t);
}

Mat2 linearized_V(const NFunction& phi, const Vec2& zeta, double eps_reg) {
  const double t = zeta.norm();
  if (t == 0.0) return regularized(std::sqrt(phi.ddphi(0.0)), eps_reg) * Mat2::Identity();
  const double d1 = phi.dphi(t);
  const double psi_prime = std::sqrt(t * d1);
  const double radial = (d1 + t * phi.ddphi(t)) / (2.0 * psi_prime);
  const double tangential = psi_prime / t;
  return radial_jacobian(radial, tangential, zeta, t);
}

StructuralSample structural_sample(const NFunction& phi, const Vec2& zeta, const Vec2& eta) {
  const Vec2 d = zeta - eta;
  const double t = d.norm();
  const double a = zeta.norm(), b = eta.norm();
  const Vec2 da = vector_A(phi, zeta) - vector_A(phi, eta);
  StructuralSample s;
  s.monotonicity = da.dot(d);
  s.v_gap = (vector_V(phi, zeta) - vector_V(phi, eta)).squaredNorm();
  const NFunction pa = shift(phi, a);
  s.shifted_zeta = pa.phi(t);
  s.shifted_dphi = pa.dphi(t);
  s.shifted_eta = shift(phi, b).phi(t);
  s.hessian = phi.ddphi(a + b) * t * t;
  s.a_gap = da.norm();
  return s;
}

// ---------------------------------------------------------------------------

NFunctionCheck check_nfunction(const NFunction& phi) {
  NFunctionCheck c;
  const auto grid = log_grid(1e-8, 1e8, 200);
  c.zero_at_origin = phi.phi(0.0) == 0.0;
  c.derivative_zero_at_origin = phi.dphi(0.0) == 0.0;

  c.derivative_monotone = true;
  double prev = 0.0;
  for (double t : grid) {
    const double d = phi.dphi(t);
    if (!(d > 0.0) || d < prev * (1.0 - 1e-12)) c.derivative_monotone = false;
    prev = d;
  }
  const double top = phi.dphi(grid.back());
  const double below = phi.dphi(grid.back() / 10.0);
  c.derivative_unbounded = std::isfinite(top) && top > below * 1.001;

  c.midpoint_convex = true;
  for (std::size_t i = 0; i < grid.size(); i += 7) {
    for (std::size_t j = i + 3; j < grid.size(); j += 11) {
      const double s = grid[i];
      const double t = grid[j];
      const double mid = phi.phi(0.5 * (s + t));
      const double avg = 0.5 * (phi.phi(s) + phi.phi(t));
      if (mid > avg * (1.0 + 1e-9)) c.midpoint_convex = false;
    }
  }

  if (const auto& ch = phi.characteristics()) {
    for (double t : grid) {
      const double r = phi.dphi(t) / (t * phi.ddphi(t));
      if (!std::isfinite(r)) continue;
      if (r < ch->lower * (1.0 - 1e-12) || r > ch->upper * (1.0 + 1e-12)) c.characteristics_hold = false;
    }
  }
  return c;
}

}  // namespace wofem
