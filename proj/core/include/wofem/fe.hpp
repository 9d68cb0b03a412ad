#pragma once

#include "wofem/mesh.hpp"
#include "wofem/nfunc.hpp"
#include "wofem/weight.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <memory>

namespace wofem {

using VectorX = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using ScalarField = std::function<double(const Vec2&)>;
using VectorField = std::function<Vec2(const Vec2&)>;
using MeshPtr = std::shared_ptr<const SimplicialMesh>;

/// Continuous P1 function: one nodal value per vertex. With
/// boundary_constrained set, boundary values are zero (the space V_h).
class FeFunction {
 public:
  FeFunction() = default;
  FeFunction(MeshPtr mesh, bool boundary_constrained = false);
  FeFunction(MeshPtr mesh, VectorX values, bool boundary_constrained = false);

  /// Nodal interpolant of f.
  static FeFunction interpolate(MeshPtr mesh, const ScalarField& f, bool boundary_constrained = false);

  const SimplicialMesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  const VectorX& values() const { return values_; }
  double operator[](int v) const { return values_[v]; }
  bool boundary_constrained() const { return constrained_; }

  /// Replaces nodal values; zeroes the boundary when constrained.
  void set_values(VectorX values);
  /// Values at interior vertices, in dof order.
  VectorX interior_values() const;
  void set_interior_values(const VectorX& x);

  Vec2 gradient(int t) const;
  double value(int t, const std::array<double, 3>& bary) const;

 private:
  MeshPtr mesh_;
  VectorX values_;
  bool constrained_ = false;
};

/// Exact transfer of a P1 function to refine_uniform(coarse mesh).
FeFunction prolongate(const FeFunction& coarse, MeshPtr fine);

/// Quadrature nodes on every cell with ω precomputed. Cells whose closure
/// contains a weight singular point are subdivided `subdivision_levels`
/// times towards that point.
struct WeightedQuadrature {
  MeshPtr mesh;
  Weight weight = Weight::constant(1.0);
  int degree = 6;
  std::vector<std::size_t> offset;  ///< nodes of cell t are [offset[t], offset[t+1])
  std::vector<Vec2> x;
  std::vector<std::array<double, 3>> bary;
  std::vector<double> w;      ///< physical quadrature weights
  std::vector<double> omega;  ///< ω(x)
  std::vector<double> cell_measure;  ///< ω(T)

  std::size_t size() const { return x.size(); }
};

WeightedQuadrature build_quadrature(MeshPtr mesh, const Weight& weight, int degree = 6,
                                    int subdivision_levels = 2);

// -- sampled fields ---------------------------------------------------------

/// f at every quadrature node.
std::vector<double> sample_function(const WeightedQuadrature& q, const ScalarField& f);
/// v at every quadrature node.
std::vector<double> sample_values(const WeightedQuadrature& q, const FeFunction& v);
/// |∇v| at every quadrature node.
std::vector<double> sample_gradient_norm(const WeightedQuadrature& q, const FeFunction& v);

/// ∑_T ∫_T ω Φ(|g|).
double modular(const NFunction& phi, const WeightedQuadrature& q, const std::vector<double>& g);

/// inf{k > 0 : modular(g / k) <= 1}, bisection to relative tolerance rel_tol.
double luxemburg_norm(const NFunction& phi, const WeightedQuadrature& q, const std::vector<double>& g,
                      double rel_tol = 1e-10);

/// ∫ ω |f|^p, or ∫ |f|^p when weighted is false.
double lp_integral(const WeightedQuadrature& q, const std::vector<double>& g, double p, bool weighted = true);

// -- right-hand side and discrete operators -----------------------------------

enum class RhsMode { AnalyticF, ExactGradient };

/// L(v) = ∫ ω f v (AnalyticF) or ∫ ω A(∇u) · ∇v (ExactGradient), plus
/// ∫ extra_load v when extra_load is set.
struct RhsFunctional {
  RhsMode mode = RhsMode::AnalyticF;
  ScalarField f;
  VectorField grad_u;
  ScalarField extra_load;

  static RhsFunctional analytic(ScalarField f);
  static RhsFunctional exact_gradient(VectorField grad_u);
  static RhsFunctional zero();
};

/// The discrete weighted Φ-Laplacian on one mesh: energy, residual and
/// Newton matrix over the interior vertices.
class Discretization {
 public:
  Discretization(MeshPtr mesh, NFunction phi, Weight weight, RhsFunctional rhs, int degree = 6);

  const SimplicialMesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  const NFunction& phi() const { return phi_; }
  const Weight& weight() const { return weight_; }
  const RhsFunctional& rhs() const { return rhs_; }
  const WeightedQuadrature& quadrature() const { return quad_; }
  /// b_i = L(φ_i) for every vertex.
  const VectorX& load() const { return load_; }

  /// Evaluates L(v).
  double rhs_value(const FeFunction& v) const;
  /// ∫ ω Φ(|∇v|) - L(v).
  double energy(const FeFunction& v) const;
  /// R_i = ∫ ω A(∇u)·∇φ_i - L(φ_i) at every vertex.
  VectorX full_residual(const FeFunction& u) const;
  /// Residual restricted to interior vertices, dof order.
  VectorX residual(const FeFunction& u) const;
  /// M_ij = ∫ ω ∇φ_j · DA(∇u) ∇φ_i over interior vertices.
  SpMat newton_matrix(const FeFunction& u, double eps_reg = 1e-10) const;
  /// ∫ ω ∇φ_j · ∇φ_i over interior vertices.
  SpMat stiffness_matrix() const;

 private:
  MeshPtr mesh_;
  NFunction phi_;
  Weight weight_;
  RhsFunctional rhs_;
  WeightedQuadrature quad_;
  VectorX load_;
};

// -- serialization --------------------------------------------------------------

/// The mesh format followed by one nodal value per line.
void write_fe_function(std::ostream& os, const FeFunction& v);
FeFunction read_fe_function(std::istream& is);

}  // namespace wofem
