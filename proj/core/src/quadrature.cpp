#include "wofem/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wofem {

GaussRule1D gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  GaussRule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // map [-1,1] -> [0,1]
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.5;
  return rule;
}

namespace {

void add_orbit3(QuadratureRule& r, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  r.points.push_back({a, a});
  r.points.push_back({b, a});
  r.points.push_back({a, b});
  for (int i = 0; i < 3; ++i) r.weights.push_back(w);
}

void add_orbit6(QuadratureRule& r, double a, double b, double w) {
  const double c = 1.0 - a - b;
  const std::array<std::array<double, 2>, 6> pts = {{{a, b}, {b, a}, {a, c}, {c, a}, {b, c}, {c, b}}};
  for (const auto& p : pts) {
    r.points.push_back(p);
    r.weights.push_back(w);
  }
}

QuadratureRule collapsed_gauss(int degree) {
  const int n = std::max(1, (degree + 2 + 1) / 2);
  const GaussRule1D g = gauss_legendre(n);
  QuadratureRule r;
  r.degree = degree;
  for (int i = 0; i < n; ++i) {
    const double u = g.nodes[i];
    for (int j = 0; j < n; ++j) {
      const double v = g.nodes[j];
      r.points.push_back({u, v * (1.0 - u)});
      r.weights.push_back(g.weights[i] * g.weights[j] * (1.0 - u));
    }
  }
  return r;
}

}  // namespace

QuadratureRule triangle_rule(int degree) {
  if (degree < 0) throw std::invalid_argument("triangle_rule: negative degree");
  QuadratureRule r;
  r.degree = degree;
  switch (degree) {
    case 0:
    case 1:
      r.points.push_back({1.0 / 3.0, 1.0 / 3.0});
      r.weights.push_back(0.5);
      return r;
    case 2:
      add_orbit3(r, 1.0 / 6.0, 1.0 / 6.0);
      return r;
    case 6:
      // Dunavant degree 6 (weights scaled to the reference area 1/2).
      add_orbit3(r, 0.249286745170910, 0.5 * 0.116786275726379);
      add_orbit3(r, 0.063089014491502, 0.5 * 0.050844906370207);
      add_orbit6(r, 0.053145049844817, 0.310352451033784, 0.5 * 0.082851075618374);
      return r;
    default:
      return collapsed_gauss(degree);
  }
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol) {
  if (a == b) return 0.0;
  using boost::math::quadrature::gauss_kronrod;
  double error = 0.0;
  return gauss_kronrod<double, 15>::integrate(f, a, b, 15, rel_tol, &error);
}

}  // namespace wofem
