// wofem: command line front end for the weighted Orlicz FEM toolkit.
//
// Thread count for element loops is read from WOFEM_NUM_THREADS (default 1).

#include "wofem/errors.hpp"
#include "wofem/interp.hpp"
#include "wofem/solve.hpp"
#include "wofem/study.hpp"
#include "wofem/weight.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace wofem;
using Json = nlohmann::ordered_json;

namespace {

Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path);
  out << text;
}

StudyCase load_case(const std::string& what) {
  if (std::filesystem::exists(what)) return case_from_json(slurp(what));
  return shipped_case(what);
}

// -- check-weight ---------------------------------------------------------------

struct CheckWeightArgs {
  std::string weight = "const:1";
  std::string phi = "power:2";
  int balls = 500;
  std::uint64_t seed = 20240611;
  std::vector<double> box{-1.0, -1.0, 1.0, 1.0};
  std::string out;
};

int run_check_weight(const CheckWeightArgs& a) {
  const Weight w = parse_weight(a.weight);
  const NFunction phi = parse_phi(a.phi);
  BallSampler s;
  s.n_balls = a.balls;
  s.seed = a.seed;
  s.box_lo = Vec2(a.box[0], a.box[1]);
  s.box_hi = Vec2(a.box[2], a.box[3]);

  const AphiResult r = is_A_Phi(w, phi, s);
  const Ball unit{Vec2(0.5 * (a.box[0] + a.box[2]), 0.5 * (a.box[1] + a.box[3])), 1.0};
  const BphiResult b = check_B_Phi(w, phi, unit);
  const SimplicialMesh square = structured_rect(8, 8, {a.box[0], a.box[1], a.box[2], a.box[3]});
  const ApOmegaResult col = is_A_p_Omega(w, square, r.i_phi, 0.1 * (a.box[2] - a.box[0]));

  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["weight"] = w.describe();
  j["phi"] = phi.describe();
  j["ap"] = {{"p", num(r.indirect.p)},
             {"characteristic", num(r.indirect.characteristic)},
             {"coarse_characteristic", num(r.indirect.coarse_characteristic)},
             {"growth_flag", r.indirect.growth_flag},
             {"divergent", r.indirect.divergent},
             {"balls", r.indirect.balls}};
  j["a_phi"] = {{"direct", num(r.direct)},
                {"direct_coarse", num(r.direct_coarse)},
                {"direct_growth", r.direct_growth},
                {"delta2_ok", r.delta2_ok},
                {"verdict", r.verdict},
                {"inconsistent", r.inconsistent}};
  j["b_phi"] = {{"finite", b.finite}, {"value", num(b.value)}, {"best_mu", num(b.best_mu)}};
  j["collar"] = {{"verdict", col.verdict},
                 {"omega_lower", num(col.omega_lower_fine)},
                 {"modulus", num(col.modulus_fine)}};
  emit(a.out, j.dump(2) + "\n");
  return 0;
}

// -- interp-test ------------------------------------------------------------------

struct InterpArgs {
  std::string weight = "const:1";
  std::string phi = "power:2";
  std::string kind = "all";
  int levels = 4;
  int base_n = 8;
  std::string pattern = "criss_cross";
  std::string csv;
  double max_spread = 1.25;
};

int run_interp_test(const InterpArgs& a) {
  MeshFamily fam;
  fam.levels = a.levels;
  fam.base_n = a.base_n;
  fam.pattern = pattern_from_string(a.pattern);
  const std::vector<MeshPtr> meshes = build_levels(fam);
  StabilityProblem pb;
  pb.phi = parse_phi(a.phi);
  pb.weight = parse_weight(a.weight);
  if (pb.weight.kind() == WeightKind::RadialPower) {
    pb.weight = Weight::radial_power(meshes[0]->vertex(nearest_vertex(*meshes[0], pb.weight.center())),
                                     pb.weight.alpha());
  }
  std::vector<StabilityKind> kinds;
  if (a.kind == "all") {
    kinds = all_stability_kinds();
  } else {
    kinds.push_back(stability_kind_from_string(a.kind));
  }
  const TestBank bank = TestBank::standard();
  std::vector<StabilityRow> all;
  bool ok = true;
  for (StabilityKind k : kinds) {
    const auto rows = stability_ratio_report(k, pb, meshes, bank);
    const double spread = level_spread(rows);
    const bool pass = spread <= a.max_spread;
    ok = ok && pass;
    std::cout << to_string(k) << " spread " << format_double(spread) << (pass ? " ok" : " UNSTABLE") << '\n';
    all.insert(all.end(), rows.begin(), rows.end());
  }
  if (!a.csv.empty()) {
    std::ostringstream os;
    write_stability_csv(os, all);
    emit(a.csv, os.str());
  }
  return ok ? 0 : 1;
}

// -- solve --------------------------------------------------------------------------

struct SolveArgs {
  std::string problem;
  std::string mesh;
  int n = 8;
  int refine = 0;
  int quad_degree = 6;
  double tol = 1e-10;
  std::string out;
  std::string solution;
};

Json report_json(const SolveReport& r) {
  Json j;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["final_residual"] = num(r.final_residual);
  j["active_cycles"] = r.active_cycles;
  j["used_fallback"] = r.used_fallback;
  j["message"] = r.message;
  Json log = Json::array();
  for (const IterationRecord& it : r.log) {
    log.push_back({{"iteration", it.iteration},
                   {"kind", it.kind},
                   {"residual", num(it.residual)},
                   {"energy", num(it.energy)},
                   {"step", num(it.step)},
                   {"active", it.active}});
  }
  j["log"] = std::move(log);
  return j;
}

int run_solve(const SolveArgs& a) {
  const StudyCase c = load_case(a.problem);
  MeshPtr mesh;
  if (!a.mesh.empty()) {
    std::ifstream in(a.mesh);
    if (!in) throw DomainError("cannot open " + a.mesh);
    mesh = std::make_shared<const SimplicialMesh>(read_mesh(in));
  } else {
    SimplicialMesh m = structured_rect(a.n, a.n, c.family.box, c.family.pattern);
    for (int k = 0; k < a.refine; ++k) m = refine_uniform(m);
    mesh = std::make_shared<const SimplicialMesh>(std::move(m));
  }
  SolverConfig cfg = c.solver;
  cfg.tol = a.tol;
  const Discretization disc(mesh, c.problem.phi, c.problem.weight, c.problem.rhs, a.quad_degree);

  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["case"] = c.name;
  j["cells"] = mesh->num_cells();
  j["dofs"] = mesh->num_dofs();
  FeFunction u;
  bool converged = false;
  if (c.kind == CaseKind::Equation) {
    EquationSolution sol = solve_equation(disc, cfg);
    j["report"] = report_json(sol.report);
    converged = sol.report.converged;
    u = std::move(sol.u);
  } else {
    const FeFunction lower = PpInterpolant(mesh).apply(*c.problem.obstacle);
    ObstacleSolution sol = solve_obstacle(disc, lower, cfg);
    j["report"] = report_json(sol.report);
    j["active_set_size"] = sol.active.size();
    j["feasibility"] = num(sol.feasibility);
    j["complementarity"] = num(sol.complementarity);
    j["multiplier_min"] = num(sol.multiplier_min);
    converged = sol.report.converged;
    u = std::move(sol.u);
  }
  if (c.problem.exact) j["quasinorm_error"] = num(quasinorm_error(c.problem.phi, disc.quadrature(), c.problem.exact->gradient, u));
  emit(a.out, j.dump(2) + "\n");
  if (!a.solution.empty()) {
    std::ofstream os(a.solution);
    if (!os) throw DomainError("cannot write " + a.solution);
    write_fe_function(os, u);
  }
  return converged ? 0 : 2;
}

// -- study --------------------------------------------------------------------------

struct StudyArgs {
  std::string name;
  int levels = 5;
  int quad_degree = 6;
  std::string out;
  std::string csv;
};

int run_study(const StudyArgs& a) {
  StudyCase c = load_case(a.name);
  c.family.levels = a.levels;
  c.quad_degree = a.quad_degree;
  const ConvergenceReport r = run_convergence(c);
  emit(a.out, report_to_json(r));
  if (!a.csv.empty()) {
    std::ostringstream os;
    write_report_csv(os, r);
    emit(a.csv, os.str());
  }
  if (!r.complete) std::cerr << "study incomplete: " << r.failure << '\n';
  return r.complete ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted Orlicz finite elements: weights, interpolants, solvers and convergence studies.\n"
               "Set WOFEM_NUM_THREADS to parallelise element loops (results do not depend on it)."};
  app.require_subcommand(1);

  CheckWeightArgs cw;
  auto* c1 = app.add_subcommand("check-weight", "A_p, A_Phi, B_Phi and boundary-collar diagnostics for a weight");
  c1->add_option("--weight", cw.weight, "const:c or radial:cx,cy,alpha")->capture_default_str();
  c1->add_option("--phi", cw.phi, "power:p or shifted:p,kappa")->capture_default_str();
  c1->add_option("--balls", cw.balls, "number of random balls")->capture_default_str();
  c1->add_option("--seed", cw.seed, "ball sampler seed")->capture_default_str();
  c1->add_option("--box", cw.box, "sampling box x0 y0 x1 y1")->expected(4);
  c1->add_option("--out", cw.out, "JSON output (stdout if omitted)");

  InterpArgs ia;
  auto* c2 = app.add_subcommand("interp-test", "Level stability tables for the Scott-Zhang and positivity-preserving interpolants");
  c2->add_option("--weight", ia.weight)->capture_default_str();
  c2->add_option("--phi", ia.phi)->capture_default_str();
  c2->add_option("--kind", ia.kind, "table name or 'all'")->capture_default_str();
  c2->add_option("--levels", ia.levels)->capture_default_str()->check(CLI::Range(2, 8));
  c2->add_option("--base-n", ia.base_n)->capture_default_str()->check(CLI::PositiveNumber);
  c2->add_option("--pattern", ia.pattern)->capture_default_str();
  c2->add_option("--max-spread", ia.max_spread)->capture_default_str();
  c2->add_option("--csv", ia.csv, "CSV output");

  SolveArgs sa;
  auto* c3 = app.add_subcommand("solve", "Solve one equation or obstacle problem");
  c3->add_option("--problem", sa.problem, "shipped case name or case JSON file")->required();
  c3->add_option("--mesh", sa.mesh, "mesh file (default: structured criss-cross mesh)");
  c3->add_option("--n", sa.n, "squares per side of the structured mesh")->capture_default_str();
  c3->add_option("--refine", sa.refine, "uniform refinements")->capture_default_str();
  c3->add_option("--quad-degree", sa.quad_degree)->capture_default_str();
  c3->add_option("--tol", sa.tol)->capture_default_str();
  c3->add_option("--out", sa.out, "JSON report (stdout if omitted)");
  c3->add_option("--solution", sa.solution, "FE function output file");

  StudyArgs st;
  auto* c4 = app.add_subcommand("study", "Convergence study for a manufactured case");
  c4->add_option("--case", st.name, "shipped case name or case JSON file")->required();
  c4->add_option("--levels", st.levels)->capture_default_str()->check(CLI::Range(3, 8));
  c4->add_option("--quad-degree", st.quad_degree)->capture_default_str();
  c4->add_option("--out", st.out, "JSON report (stdout if omitted)");
  c4->add_option("--csv", st.csv, "CSV table");

  auto* c5 = app.add_subcommand("list-cases", "Print the shipped study cases");

  CLI11_PARSE(app, argc, argv);
  try {
    if (c1->parsed()) return run_check_weight(cw);
    if (c2->parsed()) return run_interp_test(ia);
    if (c3->parsed()) return run_solve(sa);
    if (c4->parsed()) return run_study(st);
    if (c5->parsed()) {
      for (const auto& n : shipped_case_names()) std::cout << n << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
