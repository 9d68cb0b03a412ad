#include "wofem/weight.hpp"

#include "wofem/errors.hpp"
#include "wofem/fe.hpp"
#include "wofem/mesh.hpp"
#include "wofem/parallel.hpp"
#include "wofem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace wofem {

struct Weight::Data {
  WeightKind kind = WeightKind::Constant;
  double c = 1.0;
  Vec2 center = Vec2::Zero();
  double alpha = 0.0;
  double floor = 1e-14;
  std::vector<Weight> factors;
  std::function<double(const Vec2&)> fn;
  std::string name;
  std::vector<Vec2> singular;
};

Weight::Weight(std::shared_ptr<const Data> d) : d_(std::move(d)) {}

Weight Weight::constant(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("constant weight must be positive");
  auto d = std::make_shared<Data>();
  d->kind = WeightKind::Constant;
  d->c = c;
  return Weight(d);
}

Weight Weight::radial_power(const Vec2& center, double alpha, double floor) {
  if (!std::isfinite(alpha)) throw DomainError("radial power weight: alpha must be finite");
  if (!(floor > 0.0)) throw DomainError("radial power weight: floor must be positive");
  auto d = std::make_shared<Data>();
  d->kind = WeightKind::RadialPower;
  d->center = center;
  d->alpha = alpha;
  d->floor = floor;
  return Weight(d);
}

Weight Weight::product(std::vector<Weight> factors) {
  if (factors.empty()) return constant(1.0);
  auto d = std::make_shared<Data>();
  d->kind = WeightKind::Product;
  d->factors = std::move(factors);
  return Weight(d);
}

Weight Weight::custom(std::string name, std::function<double(const Vec2&)> eval, std::vector<Vec2> singular_points) {
  auto d = std::make_shared<Data>();
  d->kind = WeightKind::Custom;
  d->name = std::move(name);
  d->fn = std::move(eval);
  d->singular = std::move(singular_points);
  return Weight(d);
}

double Weight::operator()(const Vec2& x) const {
  switch (d_->kind) {
    case WeightKind::Constant:
      return d_->c;
    case WeightKind::RadialPower:
      if (d_->alpha == 0.0) return 1.0;
      return std::pow(std::max((x - d_->center).norm(), d_->floor), d_->alpha);
    case WeightKind::Product: {
      double v = 1.0;
      for (const Weight& f : d_->factors) v *= f(x);
      return v;
    }
    case WeightKind::Custom:
      return d_->fn(x);
  }
  return 1.0;
}

double Weight::pow(const Vec2& x, double s) const {
  switch (d_->kind) {
    case WeightKind::Constant:
      return std::pow(d_->c, s);
    case WeightKind::RadialPower:
      if (d_->alpha == 0.0) return 1.0;
      return std::pow(std::max((x - d_->center).norm(), d_->floor), d_->alpha * s);
    case WeightKind::Product: {
      double v = 1.0;
      for (const Weight& f : d_->factors) v *= f.pow(x, s);
      return v;
    }
    case WeightKind::Custom:
      return std::pow(d_->fn(x), s);
  }
  return 1.0;
}

Weight Weight::power(double s) const {
  switch (d_->kind) {
    case WeightKind::Constant:
      return constant(std::pow(d_->c, s));
    case WeightKind::RadialPower:
      return radial_power(d_->center, d_->alpha * s, d_->floor);
    case WeightKind::Product: {
      std::vector<Weight> fs;
      for (const Weight& f : d_->factors) fs.push_back(f.power(s));
      return product(std::move(fs));
    }
    case WeightKind::Custom: {
      auto fn = d_->fn;
      std::ostringstream os;
      os << d_->name << "^" << s;
      return custom(os.str(), [fn, s](const Vec2& x) { return std::pow(fn(x), s); }, d_->singular);
    }
  }
  return *this;
}

WeightKind Weight::kind() const { return d_->kind; }

bool Weight::is_constant() const {
  if (d_->kind == WeightKind::Constant) return true;
  if (d_->kind == WeightKind::RadialPower) return d_->alpha == 0.0;
  if (d_->kind == WeightKind::Product) {
    return std::all_of(d_->factors.begin(), d_->factors.end(), [](const Weight& f) { return f.is_constant(); });
  }
  return false;
}

std::vector<Vec2> Weight::singular_points() const {
  switch (d_->kind) {
    case WeightKind::Constant:
      return {};
    case WeightKind::RadialPower:
      if (d_->alpha == 0.0) return {};
      return {d_->center};
    case WeightKind::Product: {
      std::vector<Vec2> out;
      for (const Weight& f : d_->factors) {
        for (const Vec2& s : f.singular_points()) {
          const bool dup = std::any_of(out.begin(), out.end(), [&](const Vec2& o) { return o == s; });
          if (!dup) out.push_back(s);
        }
      }
      return out;
    }
    case WeightKind::Custom:
      return d_->singular;
  }
  return {};
}

std::string Weight::describe() const {
  std::ostringstream os;
  switch (d_->kind) {
    case WeightKind::Constant:
      os << "const(" << d_->c << ")";
      break;
    case WeightKind::RadialPower:
      os << "radial(" << d_->center.x() << "," << d_->center.y() << ";alpha=" << d_->alpha << ")";
      break;
    case WeightKind::Product:
      os << "product(";
      for (std::size_t i = 0; i < d_->factors.size(); ++i) os << (i ? "*" : "") << d_->factors[i].describe();
      os << ")";
      break;
    case WeightKind::Custom:
      os << "custom(" << d_->name << ")";
      break;
  }
  return os.str();
}

Vec2 Weight::center() const { return d_->center; }
double Weight::alpha() const { return d_->alpha; }

// ---------------------------------------------------------------------------

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

constexpr int kCoarsePanels = 6;
constexpr int kFinePanels = 18;
constexpr int kPanelPoints = 6;
// Tail ratio decades: deep enough to isolate the local power, shallow enough
// to stay above the radial weight's floor for balls of radius > 1e-2.
constexpr int kTailPanel = 11;

}  // namespace

std::vector<Ball> BallSampler::balls(const Weight& w) const {
  const Vec2 span = box_hi - box_lo;
  const double diam = span.norm();
  const double rmin = min_radius_fraction * diam;
  const double rmax = diam;
  std::mt19937_64 rng(seed);
  std::vector<Ball> out;
  out.reserve(n_balls);
  for (int i = 0; i < n_balls; ++i) {
    Ball b;
    b.center = box_lo + Vec2(uniform01(rng) * span.x(), uniform01(rng) * span.y());
    b.radius = rmin * std::pow(rmax / rmin, uniform01(rng));
    out.push_back(b);
  }
  const auto radii = log_grid(rmin, rmax, std::max(singular_radii, 2));
  for (const Vec2& s : w.singular_points()) {
    for (double r : radii) out.push_back({s, r});
    for (double r : radii) out.push_back({s + 0.5 * r * Vec2(std::cos(0.7), std::sin(0.7)), r});
  }
  return out;
}

BallIntegral integrate_ball(const Ball& b, const std::vector<Vec2>& singular_points, int k,
                            const std::function<void(const Vec2&, double*)>& f, int radial_points,
                            int angular_points) {
  BallIntegral out;
  out.coarse.assign(k, 0.0);
  out.fine.assign(k, 0.0);
  std::vector<double> vals(k);
  const double dtheta = 2.0 * std::numbers::pi / angular_points;

  const Vec2* s = nullptr;
  for (const Vec2& p : singular_points) {
    if ((p - b.center).norm() < b.radius) {
      s = &p;
      break;
    }
  }

  if (s == nullptr) {
    const GaussRule1D g = gauss_legendre(radial_points);
    for (int j = 0; j < angular_points; ++j) {
      const double th = (j + 0.5) * dtheta;
      const Vec2 e(std::cos(th), std::sin(th));
      for (int i = 0; i < radial_points; ++i) {
        const double rho = g.nodes[i] * b.radius;
        const double wt = g.weights[i] * b.radius * rho * dtheta;
        f(b.center + rho * e, vals.data());
        for (int q = 0; q < k; ++q) out.fine[q] += wt * vals[q];
      }
    }
    out.coarse = out.fine;
    return out;
  }

  out.singular = true;
  std::vector<double> inner(k, 0.0), next(k, 0.0);
  const GaussRule1D g = gauss_legendre(kPanelPoints);
  const Vec2 d = *s - b.center;
  for (int j = 0; j < angular_points; ++j) {
    const double th = (j + 0.5) * dtheta;
    const Vec2 e(std::cos(th), std::sin(th));
    const double de = d.dot(e);
    const double R = -de + std::sqrt(std::max(0.0, de * de + b.radius * b.radius - d.squaredNorm()));
    for (int panel = 0; panel < kFinePanels; ++panel) {
      const double hi = R * std::pow(10.0, -panel);
      const double lo = hi * 0.1;
      for (int i = 0; i < kPanelPoints; ++i) {
        const double rho = lo + g.nodes[i] * (hi - lo);
        const double wt = g.weights[i] * (hi - lo) * rho * dtheta;
        f(*s + rho * e, vals.data());
        for (int q = 0; q < k; ++q) {
          const double c = wt * vals[q];
          out.fine[q] += c;
          if (panel < kCoarsePanels) out.coarse[q] += c;
          if (panel == kTailPanel) inner[q] += c;
          if (panel == kTailPanel - 1) next[q] += c;
        }
      }
    }
  }
  out.tail_ratio.resize(k);
  for (int q = 0; q < k; ++q) out.tail_ratio[q] = next[q] > 0.0 ? inner[q] / next[q] : 0.0;
  return out;
}

ApDiagnostics ap_characteristic(const Weight& w, double p, const BallSampler& s) {
  if (!(p > 1.0)) throw DomainError("ap_characteristic: p must exceed 1");
  const auto balls = s.balls(w);
  const auto singular = w.singular_points();
  const double e = -1.0 / (p - 1.0);

  std::vector<double> fine(balls.size()), coarse(balls.size());
  std::vector<char> tail(balls.size(), 0);
  parallel_for(balls.size(), [&](std::size_t i) {
    const Ball& b = balls[i];
    const BallIntegral I = integrate_ball(
        b, singular, 2,
        [&](const Vec2& x, double* out) {
          out[0] = w(x);
          out[1] = w.pow(x, e);
        },
        s.radial_points, s.angular_points);
    const double area = std::numbers::pi * b.radius * b.radius;
    fine[i] = (I.fine[0] / area) * std::pow(I.fine[1] / area, p - 1.0);
    for (double t : I.tail_ratio) tail[i] |= !(t < kTailThreshold);
    coarse[i] = (I.coarse[0] / area) * std::pow(I.coarse[1] / area, p - 1.0);
  });

  ApDiagnostics d;
  d.p = p;
  d.balls = balls.size();
  d.characteristic = 0.0;
  d.coarse_characteristic = 0.0;
  for (std::size_t i = 0; i < balls.size(); ++i) {
    if (!std::isfinite(fine[i]) || !std::isfinite(coarse[i])) {
      d.divergent = true;
      d.characteristic = std::numeric_limits<double>::infinity();
      d.worst_ball = balls[i];
      continue;
    }
    if (fine[i] > d.characteristic && !d.divergent) {
      d.characteristic = fine[i];
      d.worst_ball = balls[i];
    }
    d.coarse_characteristic = std::max(d.coarse_characteristic, coarse[i]);
    d.nonintegrable_tail |= tail[i] != 0;
  }
  d.growth_flag = d.divergent || d.nonintegrable_tail || d.characteristic > 1.5 * d.coarse_characteristic;
  return d;
}

AphiResult is_A_Phi(const Weight& w, const NFunction& phi, const BallSampler& s) {
  AphiResult r;
  r.deltas = log_grid(1e-3, 1e3, 13);
  const int nd = static_cast<int>(r.deltas.size());

  const Delta2Estimate d2 = estimate_delta2(phi);
  const Delta2Estimate d2c = estimate_delta2(conjugate(phi));
  r.delta2_ok = !d2.divergent && !d2c.divergent;

  const auto balls = s.balls(w);
  const auto singular = w.singular_points();
  std::vector<double> fine(balls.size()), coarse(balls.size());
  parallel_for(balls.size(), [&](std::size_t i) {
    const Ball& b = balls[i];
    const BallIntegral I = integrate_ball(
        b, singular, nd + 1,
        [&](const Vec2& x, double* out) {
          const double om = w(x);
          out[0] = om;
          for (int k = 0; k < nd; ++k) out[k + 1] = phi.inverse_dphi(1.0 / (r.deltas[k] * om));
        },
        s.radial_points, s.angular_points);
    const double area = std::numbers::pi * b.radius * b.radius;
    double best_f = 0.0, best_c = 0.0;
    for (int k = 0; k < nd; ++k) {
      const double vf = r.deltas[k] * (I.fine[0] / area) * phi.dphi(I.fine[k + 1] / area);
      const double vc = r.deltas[k] * (I.coarse[0] / area) * phi.dphi(I.coarse[k + 1] / area);
      best_f = std::isfinite(vf) ? std::max(best_f, vf) : std::numeric_limits<double>::infinity();
      best_c = std::isfinite(vc) ? std::max(best_c, vc) : std::numeric_limits<double>::infinity();
    }
    fine[i] = best_f;
    coarse[i] = best_c;
  });
  r.direct = 0.0;
  r.direct_coarse = 0.0;
  for (std::size_t i = 0; i < balls.size(); ++i) {
    r.direct = std::max(r.direct, fine[i]);
    r.direct_coarse = std::max(r.direct_coarse, coarse[i]);
  }
  r.direct_growth = !std::isfinite(r.direct) || r.direct > 1.5 * r.direct_coarse;

  const IndexEstimate idx = estimate_indices(phi);
  r.i_phi = idx.i_lower;
  const double p_ind = std::isfinite(r.i_phi) ? std::max(r.i_phi, 1.0 + 1e-6) : 2.0;
  r.indirect = ap_characteristic(w, p_ind, s);

  const bool direct_ok = std::isfinite(r.direct) && !r.direct_growth;
  const bool indirect_ok = !r.indirect.growth_flag && !r.indirect.divergent && !idx.divergent;
  r.inconsistent = direct_ok != indirect_ok;
  r.verdict = direct_ok && indirect_ok && r.delta2_ok;
  return r;
}

BphiResult check_B_Phi(const Weight& w, const NFunction& phi, const Ball& b, int radial_points,
                       int angular_points) {
  BphiResult r;
  r.mus = log_grid(1e-6, 1e6, 13);
  const int nm = static_cast<int>(r.mus.size());
  const NFunction conj = conjugate(phi);
  const BallIntegral I = integrate_ball(
      b, w.singular_points(), nm,
      [&](const Vec2& x, double* out) {
        const double om = w(x);
        for (int k = 0; k < nm; ++k) out[k] = conj.phi(r.mus[k] / om) * om / r.mus[k];
      },
      radial_points, angular_points);
  r.values = I.fine;
  r.value = std::numeric_limits<double>::infinity();
  for (int k = 0; k < nm; ++k) {
    const bool ok = std::isfinite(I.fine[k]) && std::isfinite(I.coarse[k]) && I.fine[k] <= 1.5 * I.coarse[k];
    if (ok) {
      r.finite = true;
      if (I.fine[k] < r.value) {
        r.value = I.fine[k];
        r.best_mu = r.mus[k];
      }
    }
  }
  return r;
}

namespace {

struct CollarSample {
  double lower = std::numeric_limits<double>::infinity();
  double modulus = 0.0;
};

CollarSample sample_collar(const Weight& w, const SimplicialMesh& m, double eps, int n) {
  const Box box = m.bounding_box();
  const double hx = (box.x1 - box.x0) / n;
  const double hy = (box.y1 - box.y0) / n;
  std::vector<double> val(static_cast<std::size_t>(n) * n, std::numeric_limits<double>::quiet_NaN());
  parallel_for(static_cast<std::size_t>(n) * n, [&](std::size_t idx) {
    const int i = static_cast<int>(idx % n);
    const int j = static_cast<int>(idx / n);
    const Vec2 x(box.x0 + (i + 0.5) * hx, box.y0 + (j + 0.5) * hy);
    double dist = std::numeric_limits<double>::infinity();
    for (const Edge& f : m.boundary_faces()) {
      const Vec2& a = m.vertex(f[0]);
      const Vec2 ab = m.vertex(f[1]) - a;
      const double s = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
      dist = std::min(dist, (x - (a + s * ab)).norm());
    }
    if (dist < eps) val[idx] = w(x);
  });
  CollarSample c;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double v = val[static_cast<std::size_t>(j) * n + i];
      if (std::isnan(v)) continue;
      c.lower = std::min(c.lower, v);
      if (i + 1 < n) {
        const double r = val[static_cast<std::size_t>(j) * n + i + 1];
        if (!std::isnan(r)) c.modulus = std::max(c.modulus, std::abs(r - v) / hx);
      }
      if (j + 1 < n) {
        const double u = val[static_cast<std::size_t>(j + 1) * n + i];
        if (!std::isnan(u)) c.modulus = std::max(c.modulus, std::abs(u - v) / hy);
      }
    }
  }
  return c;
}

}  // namespace

ApOmegaResult is_A_p_Omega(const Weight& w, const SimplicialMesh& m, double p, double eps, int n) {
  if (!(eps > 0.0)) throw DomainError("is_A_p_Omega: collar width must be positive");
  ApOmegaResult r;
  const CollarSample coarse = sample_collar(w, m, eps, n);
  const CollarSample fine = sample_collar(w, m, eps, 4 * n);
  r.omega_lower = coarse.lower;
  r.modulus = coarse.modulus;
  r.omega_lower_fine = fine.lower;
  r.modulus_fine = fine.modulus;

  BallSampler s;
  const Box box = m.bounding_box();
  s.box_lo = Vec2(box.x0, box.y0);
  s.box_hi = Vec2(box.x1, box.y1);
  s.n_balls = 200;
  const ApDiagnostics ap = ap_characteristic(w, p, s);

  const bool lower_ok = std::isfinite(fine.lower) && fine.lower > 0.0 && fine.lower >= 0.75 * coarse.lower;
  const bool modulus_ok = std::isfinite(fine.modulus) && fine.modulus <= 1.5 * coarse.modulus + 1e-12;
  r.verdict = lower_ok && modulus_ok && !ap.growth_flag;
  return r;
}

double measure(const Weight& w, const SimplicialMesh& m, const std::vector<int>& cells, int degree) {
  MeshPtr ptr(&m, [](const SimplicialMesh*) {});
  const WeightedQuadrature q = build_quadrature(ptr, w, degree);
  double s = 0.0;
  if (cells.empty()) {
    for (double c : q.cell_measure) s += c;
  } else {
    for (int t : cells) s += q.cell_measure.at(t);
  }
  return s;
}

}  // namespace wofem
