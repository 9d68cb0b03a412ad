#pragma once

#include <array>
#include <functional>
#include <vector>

namespace wofem {

/// Gauss–Legendre nodes and weights on [0, 1].
struct GaussRule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussRule1D gauss_legendre(int n);

/// Quadrature on the reference triangle {(0,0), (1,0), (0,1)}; weights sum to
/// the reference area 1/2 and are all positive.
struct QuadratureRule {
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return points.size(); }
};

/// Returns a rule exact for polynomials of total degree <= degree. Degree 6 is
/// the 12-point Dunavant rule; degrees without a tabulated rule fall back to a
/// collapsed (Duffy) tensor Gauss rule.
QuadratureRule triangle_rule(int degree);

/// Globally adaptive Gauss–Kronrod integration of f over [a, b] with relative
/// tolerance rel_tol.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-10);

}  // namespace wofem
