#include "wofem/study.hpp"

#include "wofem/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace wofem {

namespace {

using Json = nlohmann::ordered_json;

Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double get_num(const Json& j, const char* key) {
  const Json& v = j.at(key);
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

std::vector<double> split_numbers(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(parse_double(item));
    } catch (const FormatError&) {
      throw DomainError("malformed " + what + " parameters: " + s);
    }
  }
  return out;
}

std::pair<std::string, std::vector<double>> split_spec(const std::string& spec, const std::string& what) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) return {spec, {}};
  return {spec.substr(0, colon), split_numbers(spec.substr(colon + 1), what)};
}

Json level_to_json(const LevelResult& l) {
  Json j;
  j["level"] = l.level;
  j["h"] = num(l.h);
  j["dofs"] = l.dofs;
  j["cells"] = l.cells;
  j["sigma_max"] = num(l.sigma_max);
  j["quasinorm_error"] = num(l.quasinorm_error);
  j["eoc"] = num(l.eoc);
  j["weighted_l2_error"] = num(l.weighted_l2_error);
  j["energy_gap"] = num(l.energy_gap);
  j["interpolation_error"] = num(l.interpolation_error);
  j["c_ba"] = num(l.c_ba);
  j["regularity"] = num(l.regularity);
  j["solver_iters"] = l.solver_iters;
  j["converged"] = l.converged;
  j["final_residual"] = num(l.final_residual);
  j["orthogonality"] = num(l.orthogonality);
  j["active"] = l.active;
  j["feasibility"] = num(l.feasibility);
  j["complementarity"] = num(l.complementarity);
  j["multiplier_min"] = num(l.multiplier_min);
  return j;
}

LevelResult level_from_json(const Json& j) {
  LevelResult l;
  l.level = j.at("level").get<int>();
  l.h = get_num(j, "h");
  l.dofs = j.at("dofs").get<long>();
  l.cells = j.at("cells").get<long>();
  l.sigma_max = get_num(j, "sigma_max");
  l.quasinorm_error = get_num(j, "quasinorm_error");
  l.eoc = get_num(j, "eoc");
  l.weighted_l2_error = get_num(j, "weighted_l2_error");
  l.energy_gap = get_num(j, "energy_gap");
  l.interpolation_error = get_num(j, "interpolation_error");
  l.c_ba = get_num(j, "c_ba");
  l.regularity = get_num(j, "regularity");
  l.solver_iters = j.at("solver_iters").get<int>();
  l.converged = j.at("converged").get<bool>();
  l.final_residual = get_num(j, "final_residual");
  l.orthogonality = get_num(j, "orthogonality");
  l.active = j.at("active").get<long>();
  l.feasibility = get_num(j, "feasibility");
  l.complementarity = get_num(j, "complementarity");
  l.multiplier_min = get_num(j, "multiplier_min");
  return l;
}

Json diagnostics_to_json(const WeightDiagnosticsReport& d) {
  Json j;
  j["weight"] = d.weight;
  j["phi"] = d.phi;
  j["a_phi"] = d.a_phi;
  j["a_phi_direct"] = num(d.a_phi_direct);
  j["a_phi_growth"] = d.a_phi_growth;
  j["ap_characteristic"] = num(d.ap_characteristic);
  j["ap_growth"] = d.ap_growth;
  j["inconsistent"] = d.inconsistent;
  j["delta2"] = d.delta2;
  j["collar_checked"] = d.collar_checked;
  j["collar_ok"] = d.collar_ok;
  j["collar_omega_lower"] = num(d.collar_omega_lower);
  j["collar_modulus"] = num(d.collar_modulus);
  j["lambda_weighted_l2"] = num(d.lambda_weighted_l2);
  j["grad_u_minus_psi"] = num(d.grad_u_minus_psi);
  return j;
}

WeightDiagnosticsReport diagnostics_from_json(const Json& j) {
  WeightDiagnosticsReport d;
  d.weight = j.at("weight").get<std::string>();
  d.phi = j.at("phi").get<std::string>();
  d.a_phi = j.at("a_phi").get<bool>();
  d.a_phi_direct = get_num(j, "a_phi_direct");
  d.a_phi_growth = j.at("a_phi_growth").get<bool>();
  d.ap_characteristic = get_num(j, "ap_characteristic");
  d.ap_growth = j.at("ap_growth").get<bool>();
  d.inconsistent = j.at("inconsistent").get<bool>();
  d.delta2 = j.at("delta2").get<bool>();
  d.collar_checked = j.at("collar_checked").get<bool>();
  d.collar_ok = j.at("collar_ok").get<bool>();
  d.collar_omega_lower = get_num(j, "collar_omega_lower");
  d.collar_modulus = get_num(j, "collar_modulus");
  d.lambda_weighted_l2 = get_num(j, "lambda_weighted_l2");
  d.grad_u_minus_psi = get_num(j, "grad_u_minus_psi");
  return d;
}

}  // namespace

std::string report_to_json(const ConvergenceReport& r) {
  Json j;
  j["schema_version"] = r.schema_version;
  j["case"] = r.case_name;
  j["kind"] = r.kind;
  j["phi"] = r.phi;
  j["weight"] = r.weight;
  j["solution"] = r.solution;
  j["pattern"] = r.pattern;
  j["base_n"] = r.base_n;
  j["quad_degree"] = r.quad_degree;
  j["expected_eoc"] = num(r.expected_eoc);
  j["eoc_tolerance"] = num(r.eoc_tolerance);
  j["boundary_condition"] = r.boundary_condition;
  j["regularity_stable"] = r.regularity_stable;
  j["rate_guaranteed"] = r.rate_guaranteed;
  j["c_ba_spread"] = num(r.c_ba_spread);
  j["last_eoc"] = num(r.last_eoc);
  j["observed_rate_one"] = r.observed_rate_one;
  j["complete"] = r.complete;
  j["failure"] = r.failure;
  j["diagnostics"] = diagnostics_to_json(r.diagnostics);
  Json levels = Json::array();
  for (const LevelResult& l : r.levels) levels.push_back(level_to_json(l));
  j["levels"] = std::move(levels);
  return j.dump(2) + "\n";
}

ConvergenceReport report_from_json(const std::string& s) {
  Json j;
  try {
    j = Json::parse(s);
  } catch (const Json::exception& e) {
    throw FormatError(std::string("report is not valid JSON: ") + e.what());
  }
  try {
    ConvergenceReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kReportSchemaVersion) {
      throw FormatError("unsupported report schema version " + std::to_string(r.schema_version));
    }
    r.case_name = j.at("case").get<std::string>();
    r.kind = j.at("kind").get<std::string>();
    r.phi = j.at("phi").get<std::string>();
    r.weight = j.at("weight").get<std::string>();
    r.solution = j.at("solution").get<std::string>();
    r.pattern = j.at("pattern").get<std::string>();
    r.base_n = j.at("base_n").get<int>();
    r.quad_degree = j.at("quad_degree").get<int>();
    r.expected_eoc = get_num(j, "expected_eoc");
    r.eoc_tolerance = get_num(j, "eoc_tolerance");
    r.boundary_condition = j.at("boundary_condition").get<bool>();
    r.regularity_stable = j.at("regularity_stable").get<bool>();
    r.rate_guaranteed = j.at("rate_guaranteed").get<bool>();
    r.c_ba_spread = get_num(j, "c_ba_spread");
    r.last_eoc = get_num(j, "last_eoc");
    r.observed_rate_one = j.at("observed_rate_one").get<bool>();
    r.complete = j.at("complete").get<bool>();
    r.failure = j.at("failure").get<std::string>();
    r.diagnostics = diagnostics_from_json(j.at("diagnostics"));
    for (const Json& l : j.at("levels")) r.levels.push_back(level_from_json(l));
    return r;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

void write_report_csv(std::ostream& os, const ConvergenceReport& r) {
  os << "level,h,dofs,quasinorm_error,eoc,solver_iters\n";
  for (const LevelResult& l : r.levels) {
    os << l.level << ',' << format_double(l.h) << ',' << l.dofs << ',' << format_double(l.quasinorm_error) << ','
       << (std::isfinite(l.eoc) ? format_double(l.eoc) : std::string()) << ',' << l.solver_iters << '\n';
  }
}

NFunction parse_phi(const std::string& spec) {
  const auto [kind, v] = split_spec(spec, "phi");
  if (kind == "power" && v.size() == 1) return make_power(v[0]);
  if (kind == "shifted" && v.size() == 2) return make_shifted_power(v[0], v[1]);
  throw DomainError("unknown N-function spec '" + spec + "' (expected power:p or shifted:p,kappa)");
}

Weight parse_weight(const std::string& spec) {
  const auto [kind, v] = split_spec(spec, "weight");
  if (kind == "const" && v.size() == 1) return Weight::constant(v[0]);
  if (kind == "radial" && v.size() == 3) return Weight::radial_power(Vec2(v[0], v[1]), v[2]);
  throw DomainError("unknown weight spec '" + spec + "' (expected const:c or radial:cx,cy,alpha)");
}

AnalyticField parse_solution(const std::string& spec) {
  const auto [kind, v] = split_spec(spec, "solution");
  if (kind == "sine" && v.empty()) return sine_field();
  if (kind == "sine" && v.size() == 1) return sine_field(v[0]);
  if (kind == "kinked" && v.empty()) return kinked_field();
  if (kind == "bump" && v.size() == 4) return bump_field(Vec2(v[0], v[1]), v[2], static_cast<int>(v[3]));
  throw DomainError("unknown solution spec '" + spec + "' (expected sine, sine:s, kinked or bump:cx,cy,R,n)");
}

StudyCase case_from_json(const std::string& s) {
  Json j;
  try {
    j = Json::parse(s);
  } catch (const Json::exception& e) {
    throw FormatError(std::string("case file is not valid JSON: ") + e.what());
  }
  try {
    MeshFamily fam;
    fam.levels = j.value("levels", fam.levels);
    fam.base_n = j.value("base_n", fam.base_n);
    if (j.contains("pattern")) fam.pattern = pattern_from_string(j.at("pattern").get<std::string>());
    const std::string name = j.value("name", std::string("custom"));
    const std::string kind = j.value("kind", std::string("equation"));
    const NFunction phi = parse_phi(j.value("phi", std::string("power:2")));
    const Weight w = parse_weight(j.value("weight", std::string("const:1")));
    StudyCase c;
    if (kind == "equation") {
      c = manufactured_equation_case(name, phi, w, parse_solution(j.value("solution", std::string("sine"))), fam);
    } else if (kind == "obstacle") {
      ObstacleConstruction oc;
      if (j.contains("obstacle")) {
        const Json& o = j.at("obstacle");
        if (o.contains("center")) oc.center = Vec2(o.at("center").at(0).get<double>(), o.at("center").at(1).get<double>());
        oc.radius = o.value("radius", oc.radius);
        oc.r_contact = o.value("r_contact", oc.r_contact);
        oc.g_scale = o.value("g_scale", oc.g_scale);
        oc.contact = o.value("contact", oc.contact);
        oc.eta_offset = o.value("eta_offset", oc.eta_offset);
      }
      c = manufactured_obstacle_case(name, phi, w, oc, fam);
    } else {
      throw DomainError("case kind must be 'equation' or 'obstacle'");
    }
    c.quad_degree = j.value("quad_degree", c.quad_degree);
    c.expected_eoc = j.value("expected_eoc", c.expected_eoc);
    c.eoc_tolerance = j.value("eoc_tolerance", c.eoc_tolerance);
    return c;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed case file: ") + e.what());
  }
}

}  // namespace wofem
