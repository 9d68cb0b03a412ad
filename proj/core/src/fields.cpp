#include "wofem/fields.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace wofem {

namespace {
constexpr double kPi = std::numbers::pi;
}

AnalyticField sine_field(double scale) {
  AnalyticField f;
  std::ostringstream os;
  os << "sine(" << scale << ")";
  f.name = os.str();
  f.value = [scale](const Vec2& x) { return scale * std::sin(kPi * x.x()) * std::sin(kPi * x.y()); };
  f.gradient = [scale](const Vec2& x) {
    return Vec2(scale * kPi * std::cos(kPi * x.x()) * std::sin(kPi * x.y()),
                scale * kPi * std::sin(kPi * x.x()) * std::cos(kPi * x.y()));
  };
  f.hessian = [scale](const Vec2& x) {
    const double sx = std::sin(kPi * x.x()), cx = std::cos(kPi * x.x());
    const double sy = std::sin(kPi * x.y()), cy = std::cos(kPi * x.y());
    Mat2 H;
    H << -sx * sy, cx * cy, cx * cy, -sx * sy;
    return (scale * kPi * kPi * H).eval();
  };
  return f;
}

AnalyticField bump_field(const Vec2& center, double radius, int n) {
  AnalyticField f;
  std::ostringstream os;
  os << "bump(" << center.x() << "," << center.y() << ";R=" << radius << ";n=" << n << ")";
  f.name = os.str();
  const double R2 = radius * radius;
  f.value = [=](const Vec2& x) {
    const double s = 1.0 - (x - center).squaredNorm() / R2;
    return s > 0.0 ? std::pow(s, n) : 0.0;
  };
  f.gradient = [=](const Vec2& x) -> Vec2 {
    const Vec2 d = x - center;
    const double s = 1.0 - d.squaredNorm() / R2;
    if (s <= 0.0) return Vec2::Zero();
    return (-2.0 * n * std::pow(s, n - 1) / R2) * d;
  };
  f.hessian = [=](const Vec2& x) -> Mat2 {
    const Vec2 d = x - center;
    const double s = 1.0 - d.squaredNorm() / R2;
    if (s <= 0.0) return Mat2::Zero();
    const double a = 4.0 * n * (n - 1) * (n >= 2 ? std::pow(s, n - 2) : 0.0) / (R2 * R2);
    const double b = -2.0 * n * std::pow(s, n - 1) / R2;
    return (a * d * d.transpose() + b * Mat2::Identity()).eval();
  };
  return f;
}

AnalyticField kinked_field() {
  AnalyticField f;
  f.name = "kinked";
  f.value = [](const Vec2& x) { return (0.5 - std::abs(x.x() - 0.5)) * std::sin(kPi * x.y()); };
  f.gradient = [](const Vec2& x) {
    const double sgn = x.x() < 0.5 ? 1.0 : -1.0;
    return Vec2(sgn * std::sin(kPi * x.y()), (0.5 - std::abs(x.x() - 0.5)) * kPi * std::cos(kPi * x.y()));
  };
  f.hessian = [](const Vec2& x) {
    const double sgn = x.x() < 0.5 ? 1.0 : -1.0;
    Mat2 H;
    const double off = sgn * kPi * std::cos(kPi * x.y());
    H << 0.0, off, off, -(0.5 - std::abs(x.x() - 0.5)) * kPi * kPi * std::sin(kPi * x.y());
    return H;
  };
  return f;
}

AnalyticField linear_field(double a, const Vec2& b) {
  AnalyticField f;
  std::ostringstream os;
  os << "linear(" << a << ";" << b.x() << "," << b.y() << ")";
  f.name = os.str();
  f.value = [=](const Vec2& x) { return a + b.dot(x); };
  f.gradient = [=](const Vec2&) { return b; };
  f.hessian = [](const Vec2&) { return Mat2::Zero().eval(); };
  return f;
}

AnalyticField cubic_collar(const Vec2& center, double r) {
  AnalyticField f;
  std::ostringstream os;
  os << "collar(" << center.x() << "," << center.y() << ";r=" << r << ")";
  f.name = os.str();
  f.value = [=](const Vec2& x) {
    const double s = (x - center).norm() - r;
    return s > 0.0 ? s * s * s : 0.0;
  };
  f.gradient = [=](const Vec2& x) -> Vec2 {
    const Vec2 d = x - center;
    const double n = d.norm();
    const double s = n - r;
    if (s <= 0.0) return Vec2::Zero();
    return (3.0 * s * s / n) * d;
  };
  f.hessian = [=](const Vec2& x) -> Mat2 {
    const Vec2 d = x - center;
    const double n = d.norm();
    const double s = n - r;
    if (s <= 0.0) return Mat2::Zero();
    const Vec2 e = d / n;
    const Mat2 P = e * e.transpose();
    return (6.0 * s * P + (3.0 * s * s / n) * (Mat2::Identity() - P)).eval();
  };
  return f;
}

}  // namespace wofem
