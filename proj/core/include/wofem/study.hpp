#pragma once

#include "wofem/interp.hpp"
#include "wofem/solve.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wofem {

inline constexpr int kReportSchemaVersion = 1;

struct MeshFamily {
  Pattern pattern = Pattern::CrissCross;
  int base_n = 8;
  int levels = 5;
  Box box{};
};

/// Base mesh and its uniform refinements.
std::vector<MeshPtr> build_levels(const MeshFamily& family);

enum class CaseKind { Equation, Obstacle };

/// Obstacle construction: ψ = u_ex - η, multiplier density g supported where
/// η vanishes, L(v) = ∫ ω A(∇u_ex)·∇v - ∫ g v.
struct ObstacleData {
  AnalyticField eta;
  ScalarField multiplier_density;
  bool contact = true;
};

struct StudyCase {
  std::string name;
  CaseKind kind = CaseKind::Equation;
  ProblemSpec problem;  ///< problem.exact is required
  MeshFamily family;
  int quad_degree = 6;
  double expected_eoc = 1.0;
  double eoc_tolerance = 0.15;
  std::optional<ObstacleData> obstacle;
  SolverConfig solver;
  /// Sampler used for the A_Φ / A_p weight diagnostics.
  BallSampler sampler;
};

/// Manufactured equation case with an ExactGradient right-hand side. The
/// weight's singular points are snapped to vertices of the base mesh.
StudyCase manufactured_equation_case(const std::string& name, const NFunction& phi, const Weight& w,
                                     const AnalyticField& u_ex, const MeshFamily& family = {});

/// Manufactured obstacle case. u_ex is the bump (1 - r²/R²)³ at `center` with
/// radius R; η = cubic collar around the contact disk of radius r_contact and
/// g = G (1 - s²/r_contact²)² on that disk. With contact off, η ≡ eta_offset
/// and g ≡ 0.
struct ObstacleConstruction {
  Vec2 center{0.5, 0.5};
  double radius = 0.45;
  double r_contact = 0.2;
  double g_scale = 10.0;
  bool contact = true;
  double eta_offset = 0.2;
};

StudyCase manufactured_obstacle_case(const std::string& name, const NFunction& phi, const Weight& w,
                                     const ObstacleConstruction& c = {}, const MeshFamily& family = {});

/// Names of the shipped cases, in suite order.
std::vector<std::string> shipped_case_names();
StudyCase shipped_case(const std::string& name);

/// (∑_T ∫_T ω |V(∇u_ex) - V(∇u_h)|²)^{1/2}.
double quasinorm_error(const NFunction& phi, const WeightedQuadrature& q, const VectorField& grad_exact,
                       const FeFunction& u_h);
double quasinorm_error(const NFunction& phi, const Weight& w, const VectorField& grad_exact, const FeFunction& u_h,
                       int degree = 6);

/// ∑_T ∫_T ω |∇V(∇u)|², with ∇V(∇u) = DV(∇u) ∇²u.
double regularity_integral(const NFunction& phi, const WeightedQuadrature& q, const AnalyticField& u);

struct LevelResult {
  int level = 0;
  double h = 0.0;
  long dofs = 0;
  long cells = 0;
  double sigma_max = 0.0;
  double quasinorm_error = 0.0;
  double eoc = 0.0;  ///< NaN on the first level
  double weighted_l2_error = 0.0;
  double energy_gap = 0.0;  ///< J(u_h) - J(u_ex)
  double interpolation_error = 0.0;  ///< quasi-norm error of Π_h u_ex
  double c_ba = 0.0;
  double regularity = 0.0;
  int solver_iters = 0;
  bool converged = false;
  double final_residual = 0.0;
  double orthogonality = 0.0;  ///< max |R_i| over free interior dofs
  // Obstacle cases.
  long active = 0;
  double feasibility = 0.0;
  double complementarity = 0.0;
  double multiplier_min = 0.0;
};

struct WeightDiagnosticsReport {
  std::string weight;
  std::string phi;
  bool a_phi = false;
  double a_phi_direct = 0.0;
  bool a_phi_growth = false;
  double ap_characteristic = 0.0;
  bool ap_growth = false;
  bool inconsistent = false;
  bool delta2 = false;
  // Obstacle cases.
  bool collar_checked = false;
  bool collar_ok = false;
  double collar_omega_lower = 0.0;
  double collar_modulus = 0.0;
  double lambda_weighted_l2 = 0.0;  ///< (∫ g² / ω)^{1/2}
  double grad_u_minus_psi = 0.0;    ///< ‖∇(u - ψ)‖_{L²(ω)}
};

struct ConvergenceReport {
  int schema_version = kReportSchemaVersion;
  std::string case_name;
  std::string kind;
  std::string phi;
  std::string weight;
  std::string solution;
  std::string pattern;
  int base_n = 0;
  int quad_degree = 6;
  double expected_eoc = 1.0;
  double eoc_tolerance = 0.15;
  bool boundary_condition = false;
  bool regularity_stable = false;
  bool rate_guaranteed = false;
  double c_ba_spread = 0.0;
  double last_eoc = 0.0;
  bool observed_rate_one = false;
  bool complete = false;
  std::string failure;
  WeightDiagnosticsReport diagnostics;
  std::vector<LevelResult> levels;
};

/// Solves every level with coarse-to-fine warm starts and computes errors,
/// EOCs and diagnostics. A nonconvergent level ends the study with a
/// partial report.
ConvergenceReport run_convergence(const StudyCase& c);

WeightDiagnosticsReport weight_diagnostics(const StudyCase& c, const SimplicialMesh& base);

// -- reports ---------------------------------------------------------------------

std::string report_to_json(const ConvergenceReport& r);
ConvergenceReport report_from_json(const std::string& s);
/// Columns level,h,dofs,quasinorm_error,eoc,solver_iters.
void write_report_csv(std::ostream& os, const ConvergenceReport& r);

/// Case description file: {"kind": "equation"|"obstacle", "phi": "...",
/// "weight": "...", "solution": "...", "levels": n, "base_n": n, ...}.
StudyCase case_from_json(const std::string& s);

/// "power:p" or "shifted:p,kappa".
NFunction parse_phi(const std::string& spec);
/// "const:c" or "radial:cx,cy,alpha".
Weight parse_weight(const std::string& spec);
/// "sine", "sine:scale" or "bump:cx,cy,R,n".
AnalyticField parse_solution(const std::string& spec);

}  // namespace wofem
