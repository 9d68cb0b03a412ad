#pragma once

#include "wofem/fe.hpp"
#include "wofem/fields.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace wofem {

/// Scott–Zhang quasi-interpolant Π_h. Interior vertices average over their
/// lowest-indexed cell, boundary vertices over their lowest-indexed boundary
/// face, using the L² dual basis of P1 on that simplex.
class SzOperator {
 public:
  struct Simplex {
    bool face = false;
    int index = -1;
  };

  explicit SzOperator(MeshPtr mesh);

  const SimplicialMesh& mesh() const { return *mesh_; }
  const Simplex& simplex(int v) const { return simplex_[v]; }

  FeFunction apply(const ScalarField& f, bool boundary_constrained = false) const;
  FeFunction apply(const FeFunction& f, bool boundary_constrained = false) const;

  /// ∫_{σ_v} ψ_v φ_w for the vertices w of σ_v, in the simplex's vertex order.
  std::vector<double> dual_moments(int v) const;

 private:
  double average(int v, const std::function<double(int, const std::array<double, 3>&, const Vec2&)>& f) const;

  MeshPtr mesh_;
  std::vector<Simplex> simplex_;
};

/// Positivity-preserving interpolant ℘_h: nodal values are averages over the
/// inscribed ball B_v of each interior vertex star; boundary values are 0.
class PpInterpolant {
 public:
  struct Node {
    int cell = -1;
    std::array<double, 3> bary{};
    Vec2 x = Vec2::Zero();
    double w = 0.0;
  };

  /// The ball rule is a radial Gauss rule times an angular Gauss rule on each
  /// wedge of the star, so it is exact for P1 data on the star.
  explicit PpInterpolant(MeshPtr mesh, int radial_points = 16, int angular_points_per_wedge = 8);

  const SimplicialMesh& mesh() const { return *mesh_; }
  const VertexStar& star(int dof) const { return stars_[dof]; }
  const std::vector<Node>& nodes(int dof) const { return nodes_[dof]; }
  /// Sum of the ball rule's weights at an interior vertex (should be π r_v²).
  double ball_measure(int dof) const;

  FeFunction apply(const ScalarField& f) const;
  FeFunction apply(const FeFunction& f) const;

 private:
  MeshPtr mesh_;
  std::vector<VertexStar> stars_;
  std::vector<std::vector<Node>> nodes_;
};

// -- stability tables ------------------------------------------------------------

enum class StabilityKind { SZ_L1, SZ_weighted_modular, SZ_shifted, PP_Lp, PP_weighted_modular, PP_weighted_approx };

std::string to_string(StabilityKind k);
StabilityKind stability_kind_from_string(const std::string& s);
const std::vector<StabilityKind>& all_stability_kinds();

/// Test functions for the stability tables: analytic fields plus one seeded
/// random P1 function on a coarse criss-cross mesh of the same box, which is
/// piecewise linear on every mesh of the family.
struct TestBank {
  std::vector<AnalyticField> fields;
  bool random_fe = true;
  int random_coarse_n = 2;
  std::uint64_t seed = 7;

  /// sine, kinked and the random function.
  static TestBank standard();
};

/// Seeded random P1 function on m: interior values uniform in [lo, hi],
/// boundary values zero.
FeFunction random_fe_function(MeshPtr m, std::uint64_t seed, double lo = -1.0, double hi = 1.0);

struct StabilityRow {
  int level = 0;
  double h = 0.0;
  StabilityKind kind = StabilityKind::SZ_L1;
  double max_ratio = 0.0;
  double median_ratio = 0.0;
  std::string worst_function;
};

struct StabilityProblem {
  NFunction phi = make_power(2.0);
  Weight weight = Weight::constant(1.0);
  std::vector<double> shifts{0.0, 0.1, 1.0, 10.0};
  std::vector<double> lp_exponents{1.0, 2.0, std::numeric_limits<double>::infinity()};
  int quad_degree = 6;
};

/// Per-level maxima and medians of the per-element ratios, over the bank.
std::vector<StabilityRow> stability_ratio_report(StabilityKind kind, const StabilityProblem& problem,
                                                 const std::vector<MeshPtr>& levels, const TestBank& bank);

/// max over levels / min over levels of max_ratio.
double level_spread(const std::vector<StabilityRow>& rows);

struct QuasiBestRow {
  int level = 0;
  double h = 0.0;
  double max_ratio = 0.0;
  double median_ratio = 0.0;
};

/// Per element ⨍_T ω|V(∇v) - V(∇Π_h v)|² / (h_T² ⨍_{S_T} ω|∇V(∇v)|²).
std::vector<QuasiBestRow> quasi_best_report(const NFunction& phi, const Weight& w, const AnalyticField& v,
                                            const std::vector<MeshPtr>& levels, int quad_degree = 6);

void write_stability_csv(std::ostream& os, const std::vector<StabilityRow>& rows);

}  // namespace wofem
