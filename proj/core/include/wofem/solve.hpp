#pragma once

#include "wofem/fe.hpp"
#include "wofem/fields.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wofem {

struct ProblemSpec {
  NFunction phi = make_power(2.0);
  Weight weight = Weight::constant(1.0);
  RhsFunctional rhs = RhsFunctional::zero();
  /// Obstacle ψ (ψ <= 0 on ∂Ω); absent for the equation.
  std::optional<ScalarField> obstacle;
  std::optional<AnalyticField> exact;
};

struct SolverConfig {
  double tol = 1e-10;  ///< residual tolerance, discrete max norm
  int max_iterations = 100;
  double armijo = 1e-4;
  double contraction = 0.5;
  int max_line_search = 60;
  int max_active_cycles = 50;
  int max_pgs_sweeps = 5000;
  double eps_reg = 1e-10;
};

struct IterationRecord {
  int iteration = 0;
  std::string kind;  ///< newton, gradient, pgs, active_set
  double residual = 0.0;
  double energy = 0.0;
  double step = 0.0;
  long active = -1;  ///< active-set size (obstacle only)
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double final_residual = 0.0;
  int active_cycles = 0;
  bool used_fallback = false;
  std::string message;
  std::vector<IterationRecord> log;
};

struct EquationSolution {
  FeFunction u;
  SolveReport report;
};

/// Damped Newton on the discrete weighted Φ-Laplace equation. Starts from
/// zero unless an initial guess is given.
EquationSolution solve_equation(const Discretization& disc, const SolverConfig& cfg = {},
                                const FeFunction* initial = nullptr);

struct ObstacleSolution {
  FeFunction u;
  FeFunction lower;         ///< ℘_h ψ
  std::vector<int> active;  ///< vertex ids where u = ℘_h ψ is enforced
  VectorX multiplier;       ///< λ_h over interior vertices (dof order)
  double feasibility = 0.0;      ///< max (℘_h ψ - u)_+
  double complementarity = 0.0;  ///< max |λ_i (u - ℘_h ψ)_i|
  double multiplier_min = 0.0;   ///< min λ_i
  SolveReport report;
};

/// Primal-dual active set for u >= lower at interior vertices, with projected
/// nonlinear Gauss–Seidel when the active set cycles.
ObstacleSolution solve_obstacle(const Discretization& disc, const FeFunction& lower, const SolverConfig& cfg = {},
                                const FeFunction* initial = nullptr);

/// λ_h,i = ∫ ω A(∇u)·∇φ_i - L(φ_i) at interior vertices.
VectorX discrete_multiplier(const Discretization& disc, const FeFunction& u);

/// Convenience overloads building the discretization (and ℘_h ψ) from a spec.
EquationSolution solve_equation(const ProblemSpec& ps, MeshPtr mesh, const SolverConfig& cfg = {}, int degree = 6);
ObstacleSolution solve_obstacle(const ProblemSpec& ps, MeshPtr mesh, const SolverConfig& cfg = {}, int degree = 6);

}  // namespace wofem
