#include "hscop/json_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace hscop {

namespace {

using nlohmann::json;

json affine_to_json(const AffineFn& f) {
  json j = json::array();
  for (double c : f.coef) j.push_back(c);
  j.push_back(f.offset);
  return j;
}

AffineFn affine_from_json(const json& j, std::size_t n) {
  if (!j.is_array() || j.size() != n + 1)
    throw std::invalid_argument("problem json: affine piece of wrong length");
  AffineFn f;
  f.coef.reserve(n);
  for (std::size_t i = 0; i < n; ++i) f.coef.push_back(j[i].get<double>());
  f.offset = j[n].get<double>();
  return f;
}

json pa_to_json(const PAFunction& f) {
  json cvx = json::array(), cve = json::array();
  for (const auto& p : f.cvx) cvx.push_back(affine_to_json(p));
  for (const auto& p : f.cve) cve.push_back(affine_to_json(p));
  return json{{"cvx", cvx}, {"cve", cve}};
}

PAFunction pa_from_json(const json& j, std::size_t n) {
  PAFunction f;
  for (const auto& p : j.at("cvx")) f.cvx.push_back(affine_from_json(p, n));
  for (const auto& p : j.at("cve")) f.cve.push_back(affine_from_json(p, n));
  f.validate();
  return f;
}

json expr_to_json(const HeavisideExpr& e) {
  json terms = json::array();
  for (const auto& t : e.terms) {
    json jt = pa_to_json(t.inner);
    jt["psi"] = t.coeff;
    jt["kind"] = t.kind == HeavisideKind::closed_at_zero ? "closed" : "open";
    terms.push_back(std::move(jt));
  }
  json linear = json::array();
  for (double c : e.linear.coef) linear.push_back(c);
  return json{{"linear", linear}, {"offset", e.linear.offset}, {"terms", terms}};
}

HeavisideExpr expr_from_json(const json& j, std::size_t n) {
  HeavisideExpr e;
  e.linear.coef.reserve(n);
  const json& lin = j.at("linear");
  if (lin.size() != n) throw std::invalid_argument("problem json: linear part of wrong length");
  for (const auto& c : lin) e.linear.coef.push_back(c.get<double>());
  e.linear.offset = j.value("offset", 0.0);
  for (const auto& jt : j.value("terms", json::array())) {
    HeavisideTerm t;
    t.coeff = jt.at("psi").get<double>();
    std::string kind = jt.value("kind", "closed");
    if (kind == "closed")
      t.kind = HeavisideKind::closed_at_zero;
    else if (kind == "open")
      t.kind = HeavisideKind::open_at_zero;
    else
      throw std::invalid_argument("problem json: unknown kind '" + kind + "'");
    t.inner = pa_from_json(jt, n);
    e.terms.push_back(std::move(t));
  }
  return e;
}

json box_to_json(const Box& b) {
  json rows = json::array();
  for (const auto& r : b.rows) {
    json coef = json::array();
    for (double c : r.coef) coef.push_back(c);
    const char* sense = r.sense == RowSense::le ? "<=" : (r.sense == RowSense::ge ? ">=" : "=");
    rows.push_back(json{{"coef", coef}, {"sense", sense}, {"rhs", r.rhs}});
  }
  return json{{"lower", b.lower}, {"upper", b.upper}, {"rows", rows}};
}

Box box_from_json(const json& j) {
  Box b;
  b.lower = j.at("lower").get<std::vector<double>>();
  b.upper = j.at("upper").get<std::vector<double>>();
  for (const auto& jr : j.value("rows", json::array())) {
    LinearRow r;
    r.coef = jr.at("coef").get<std::vector<double>>();
    std::string sense = jr.at("sense").get<std::string>();
    if (sense == "<=")
      r.sense = RowSense::le;
    else if (sense == ">=")
      r.sense = RowSense::ge;
    else if (sense == "=")
      r.sense = RowSense::eq;
    else
      throw std::invalid_argument("problem json: unknown sense '" + sense + "'");
    r.rhs = jr.at("rhs").get<double>();
    b.rows.push_back(std::move(r));
  }
  b.validate();
  return b;
}

}  // namespace

std::string problem_to_json(const HeavisideProblem& p, int indent) {
  json j;
  j["n"] = p.dim();
  j["box"] = box_to_json(p.domain);
  j["objective"] = expr_to_json(p.objective);
  json cons = json::array();
  for (const auto& c : p.constraints) cons.push_back(expr_to_json(c));
  j["constraints"] = cons;
  return j.dump(indent);
}

HeavisideProblem problem_from_json(const std::string& text) {
  json j = json::parse(text);
  std::size_t n = j.at("n").get<std::size_t>();
  HeavisideProblem p;
  p.domain = box_from_json(j.at("box"));
  if (p.domain.dim() != n) throw std::invalid_argument("problem json: box dimension mismatch");
  p.objective = expr_from_json(j.at("objective"), n);
  for (const auto& jc : j.value("constraints", json::array()))
    p.constraints.push_back(expr_from_json(jc, n));
  p.validate();
  return p;
}

HeavisideProblem problem_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open problem file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return problem_from_json(ss.str());
}

namespace {

json eps_expr_to_json(const EpsExpr& e) {
  json terms = json::array();
  for (const auto& t : e.terms) {
    json jt = pa_to_json(t.inner);
    jt["psi"] = t.coeff;
    jt["kind"] = t.kind == EpsKind::closed_at_zero ? "closed" : "open_at_minus_eps";
    terms.push_back(std::move(jt));
  }
  json linear = json::array();
  for (double c : e.linear.coef) linear.push_back(c);
  return json{{"linear", linear}, {"offset", e.linear.offset}, {"terms", terms}};
}

json eps_body(const EpsProblem& p) {
  json j;
  j["n"] = p.dim();
  j["box"] = box_to_json(p.domain);
  j["objective"] = eps_expr_to_json(p.objective);
  json cons = json::array();
  for (const auto& c : p.constraints) cons.push_back(eps_expr_to_json(c));
  j["constraints"] = cons;
  return j;
}

}  // namespace

std::string eps_problem_to_json(const EpsProblem& p, int indent) {
  json j = eps_body(p);
  j["meta"] = json{{"eps", p.eps}};
  return j.dump(indent);
}

std::string decomposed_to_json(const DecomposedProblem& dec, int indent) {
  json j = eps_body(dec.surrogate);
  json sel = json::array();
  for (const auto& block : dec.selection.kl) {
    json bl = json::array();
    for (auto [k, l] : block) bl.push_back(json::array({k, l}));
    sel.push_back(std::move(bl));
  }
  j["meta"] = json{{"eps", dec.eps()}, {"rho", dec.rho}, {"center", dec.center},
                   {"selection", sel}};
  return j.dump(indent);
}

std::string trace_to_json_lines(const RunTrace& trace, bool redact_times) {
  std::ostringstream out;
  for (const auto& r : trace.records) {
    json j;
    j["nu"] = r.nu;
    j["eps"] = r.eps;
    j["selections_tried"] = r.selections_tried;
    j["selection_fallback"] = r.selection_fallback;
    j["objective_entry"] = r.theta_entry;
    j["objective_exit"] = r.theta_exit;
    j["subproblem_objective"] = r.objective;
    j["iterate"] = r.iterate;
    j["step_norm"] = r.step_norm;
    if (std::isfinite(r.delta_prime))
      j["delta_prime"] = r.delta_prime;
    else
      j["delta_prime"] = nullptr;
    j["nodes"] = r.stats.nodes;
    j["lp_iterations"] = r.stats.lp_iterations;
    j["wall_ms"] = redact_times ? 0.0 : r.stats.wall_ms;
    out << j.dump() << "\n";
  }
  return out.str();
}

std::string pip_trace_to_json_lines(const PipTrace& trace, bool redact_times) {
  std::ostringstream out;
  for (const auto& it : trace.iterates) {
    json j;
    j["mu"] = it.mu;
    j["r"] = it.r;
    j["free"] = it.counts.free;
    j["fixed_one"] = it.counts.fixed_one;
    j["fixed_zero"] = it.counts.fixed_zero;
    j["objective"] = it.objective;
    j["iterate"] = it.x;
    if (std::isfinite(it.delta_min))
      j["delta_min"] = it.delta_min;
    else
      j["delta_min"] = nullptr;
    j["nodes"] = it.stats.nodes;
    j["lp_iterations"] = it.stats.lp_iterations;
    j["wall_ms"] = redact_times ? 0.0 : it.stats.wall_ms;
    out << j.dump() << "\n";
  }
  return out.str();
}

std::string solution_to_json(std::span<const double> x, double objective, bool feasible,
                             const std::string& method, double wall_ms, bool redact_times,
                             int indent) {
  json j;
  j["method"] = method;
  j["feasible"] = feasible;
  j["objective"] = objective;
  j["x"] = std::vector<double>(x.begin(), x.end());
  j["wall_ms"] = redact_times ? 0.0 : wall_ms;
  return j.dump(indent);
}

std::string verify_report_to_json(const VerifyReport& rep, int indent) {
  json j;
  j["monotone_objective"] = rep.monotone_objective;
  j["monotone_violation_at"] = rep.monotone_violation_at;
  j["descent_with_prox"] = rep.descent_with_prox;
  j["steps_converged"] = rep.steps_converged;
  j["final_feasible"] = rep.final_feasible;
  j["selection_singleton"] = rep.selection_singleton;
  j["zero_negative_set_empty"] = rep.zero_negative_set_empty;
  return j.dump(indent);
}

}  // namespace hscop
