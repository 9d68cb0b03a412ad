#pragma once

#include "wofem/fe.hpp"

#include <string>

namespace wofem {

/// A smooth (or piecewise smooth) test function with derivatives.
struct AnalyticField {
  std::string name;
  ScalarField value;
  VectorField gradient;
  std::function<Mat2(const Vec2&)> hessian;
};

/// scale · sin(πx₁) sin(πx₂).
AnalyticField sine_field(double scale = 1.0);

/// (1 - |x - c|² / R²)^n on the disk of radius R, zero outside.
AnalyticField bump_field(const Vec2& center, double radius, int n);

/// (½ - |x₁ - ½|) sin(πx₂): Lipschitz, with a gradient jump along x₁ = ½.
AnalyticField kinked_field();

/// a + b · x.
AnalyticField linear_field(double a, const Vec2& b);

/// (|x - c| - r)³ outside the disk of radius r, zero inside; C² with
/// η = 0 exactly on the disk.
AnalyticField cubic_collar(const Vec2& center, double r);

}  // namespace wofem
