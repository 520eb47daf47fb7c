#include "hscop/idsa.hpp"

#include <cmath>

namespace hscop {

namespace {

double step_norm(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

struct InnerOutcome {
  bool solved = false;
  std::vector<double> x;
  double objective = -kInf;
  double delta_prime = kInf;
  MilpStats stats;
};

InnerOutcome solve_inner(const DecomposedProblem& dec, const EpsProblem& full,
                         std::span<const double> x, const IdsaConfig& cfg, double big_m,
                         std::uint64_t pip_seed) {
  InnerOutcome out;
  const EpsProblem& target = cfg.decompose ? dec.surrogate : full;
  std::optional<ProxSpec> prox;
  if (dec.rho > 0.0) prox = ProxSpec{dec.center, dec.rho, cfg.prox_segments};

  if (cfg.inner == IdsaConfig::Inner::full_mip) {
    IndexPartition part = IndexPartition::all_free(target);
    MilpModel model = build_direct_ip(target, part, big_m, prox, {});
    MilpConfig sub = cfg.subproblem;
    sub.warm_x = lift_point(target, part, model, x);
    MilpSolution sol = solve_milp(model, sub);
    out.stats = sol.stats;
    if (!sol.has_solution()) return out;
    out.solved = true;
    out.objective = sol.objective;
    out.x.assign(sol.x.begin(), sol.x.begin() + model.num_structural);
    return out;
  }

  PipProblem prob;
  prob.problem = &target;
  prob.prox = prox;
  prob.big_m = big_m;
  PipConfig pcfg = cfg.pip;
  pcfg.seed = pip_seed;
  try {
    PipResult res = pip_solve(prob, x, pcfg);
    out.solved = true;
    out.objective = res.objective;
    out.x = res.x;
    out.stats = res.stats;
    if (!res.trace.iterates.empty()) out.delta_prime = res.trace.iterates.back().delta_min;
  } catch (const PipStartInfeasible&) {
    // enlarged selections need not admit the current iterate; skip them
  }
  return out;
}

}  // namespace

namespace {

// The bound midpoint unless the extra box rows exclude it, in which case any
// vertex of the polyhedron (found by a zero-objective solve) stands in.
std::vector<double> domain_start_point(const Box& box) {
  std::vector<double> center = box.center();
  if (box.rows.empty() || box.contains(center, 0.0)) return center;
  LpModel lp;
  for (std::size_t j = 0; j < box.dim(); ++j) lp.add_var(box.lower[j], box.upper[j], 0.0);
  for (const auto& r : box.rows) {
    std::vector<std::pair<int, double>> coef;
    for (std::size_t j = 0; j < r.coef.size(); ++j)
      if (r.coef[j] != 0.0) coef.emplace_back(static_cast<int>(j), r.coef[j]);
    lp.add_row(std::move(coef), r.sense, r.rhs);
  }
  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::optimal)
    throw std::runtime_error("bootstrap: the box polyhedron is empty");
  return sol.x;
}

}  // namespace

std::vector<double> bootstrap_feasible(const EpsFamily& family, double eps0,
                                       const IdsaConfig& cfg,
                                       std::optional<std::vector<double>> start) {
  EpsProblem p = family(eps0);
  std::vector<double> center = start ? std::move(*start) : domain_start_point(p.domain);
  if (p.constraints.empty()) return center;
  if (p.feasible(center)) return center;

  double big_m = std::max(compute_big_m(p), cfg.big_m_floor);
  auto sel = enumerate_selections(p, center, 0.0).first();
  DecomposedProblem dec = make_decomposed(p, sel, center, cfg.rho);
  const EpsProblem& target = cfg.decompose ? dec.surrogate : p;

  PipProblem prob;
  prob.problem = &target;
  if (cfg.rho > 0.0) prob.prox = ProxSpec{center, cfg.rho, cfg.prox_segments};
  prob.residual_lambda = cfg.lambda;
  prob.big_m = big_m;

  std::vector<double> x;
  double gamma = 0.0;
  if (target.total_terms() <= static_cast<std::size_t>(cfg.bootstrap_full_mip_max_terms)) {
    IndexPartition part = IndexPartition::all_free(target);
    MilpBuildOptions opts;
    opts.residual_lambda = cfg.lambda;
    MilpModel model = build_direct_ip(target, part, big_m, prob.prox, opts);
    MilpConfig sub = cfg.subproblem;
    sub.warm_x = lift_point(target, part, model, center);
    MilpSolution sol = solve_milp(model, sub);
    if (!sol.has_solution()) throw BootstrapInfeasible(kInf);
    x.assign(sol.x.begin(), sol.x.begin() + model.num_structural);
    if (model.residual_var >= 0) gamma = sol.x[static_cast<std::size_t>(model.residual_var)];
  } else {
    PipConfig pcfg = cfg.pip;
    pcfg.seed = cfg.pip.seed;
    PipResult res = pip_solve(prob, center, pcfg);
    x = res.x;
    gamma = res.gamma;
  }
  if (gamma > 1e-7) throw BootstrapInfeasible(gamma);
  return x;
}

std::vector<double> bootstrap_feasible(const HeavisideProblem& p, double eps0, double lambda) {
  IdsaConfig cfg;
  cfg.lambda = lambda;
  return bootstrap_feasible([&p](double e) { return make_eps_problem(p, e); }, eps0, cfg);
}

IdsaResult idsa_run(const EpsFamily& family, const IdsaConfig& cfg,
                    std::optional<std::vector<double>> x0) {
  if (cfg.eps_schedule.empty())
    throw std::invalid_argument("idsa_run: empty epsilon schedule");
  for (std::size_t i = 0; i + 1 < cfg.eps_schedule.size(); ++i)
    if (!(cfg.eps_schedule[i] > cfg.eps_schedule[i + 1]) || cfg.eps_schedule[i + 1] <= 0.0)
      throw std::invalid_argument("idsa_run: schedule must be positive and strictly decreasing");

  std::vector<double> x =
      x0 ? std::move(*x0) : bootstrap_feasible(family, cfg.eps_schedule.front(), cfg);

  IdsaResult out;
  out.trace.start = x;
  int rounds = cfg.nu_max > 0 ? cfg.nu_max : static_cast<int>(cfg.eps_schedule.size());

  for (int nu = 0; nu < rounds; ++nu) {
    double eps = cfg.eps_schedule[static_cast<std::size_t>(
        std::min<std::size_t>(static_cast<std::size_t>(nu), cfg.eps_schedule.size() - 1))];
    EpsProblem p = family(eps);
    double big_m = std::max(compute_big_m(p), cfg.big_m_floor);

    RunRecord rec;
    rec.nu = nu;
    rec.eps = eps;
    rec.theta_entry = p.objective_value(x);

    SelectionSet delta_set = enumerate_selections(p, x, cfg.delta);
    bool fallback = false;
    std::vector<PieceSelection> selections;
    if (cfg.selection_mode == IdsaConfig::SelectionMode::all &&
        delta_set.cardinality() <= cfg.selection_cap) {
      delta_set.for_each([&](const PieceSelection& sel) {
        selections.push_back(sel);
        return true;
      });
    } else {
      fallback = cfg.selection_mode == IdsaConfig::SelectionMode::all;
      selections.push_back(enumerate_selections(p, x, 0.0).first());
    }
    rec.selection_fallback = fallback;

    InnerOutcome best;
    std::uint64_t sub_seed = cfg.pip.seed + static_cast<std::uint64_t>(nu) * 7919;
    for (const auto& sel : selections) {
      DecomposedProblem dec = make_decomposed(p, sel, x, cfg.rho);
      InnerOutcome o = solve_inner(dec, p, x, cfg, big_m, sub_seed);
      rec.stats.nodes += o.stats.nodes;
      rec.stats.lp_iterations += o.stats.lp_iterations;
      rec.stats.wall_ms += o.stats.wall_ms;
      ++rec.selections_tried;
      if (o.solved && o.objective > best.objective) best = std::move(o);
      if (!cfg.decompose) break;  // without decomposition the subproblem is selection-free
    }
    if (!best.solved)
      throw std::runtime_error("idsa_run: every subproblem infeasible at round " +
                               std::to_string(nu));

    rec.objective = best.objective;
    rec.delta_prime = best.delta_prime;
    rec.step_norm = step_norm(best.x, x);
    rec.theta_exit = p.objective_value(best.x);
    rec.iterate = best.x;
    x = best.x;
    double step = rec.step_norm;
    out.trace.records.push_back(std::move(rec));
    if (step <= cfg.step_tol) break;
  }

  out.x = x;
  EpsProblem last = family(out.trace.records.empty() ? cfg.eps_schedule.front()
                                                     : out.trace.records.back().eps);
  out.objective = last.objective_value(x);
  return out;
}

IdsaResult idsa_run(const HeavisideProblem& p, const IdsaConfig& cfg,
                    std::optional<std::vector<double>> x0) {
  p.validate();
  return idsa_run([&p](double e) { return make_eps_problem(p, e); }, cfg, std::move(x0));
}

IdsaResult idsa_run(const ProductProblem& p, const IdsaConfig& cfg,
                    std::optional<std::vector<double>> x0) {
  return idsa_run([&p](double e) { return flatten_products(p, e); }, cfg, std::move(x0));
}

VerifyReport verify_run(const RunTrace& trace, const EpsFamily& family,
                        const std::function<bool(std::span<const double>)>& original_feasible,
                        const Box& domain, const IdsaConfig& cfg, const VerifyTolerances& tol) {
  VerifyReport rep;
  const auto& recs = trace.records;
  for (std::size_t i = 0; i + 1 < recs.size(); ++i) {
    if (recs[i + 1].theta_entry < recs[i].theta_entry - tol.monotone_slack) {
      rep.monotone_objective = false;
      rep.monotone_violation_at = static_cast<int>(i + 1);
      break;
    }
  }
  if (cfg.rho > 0.0) {
    const std::vector<double>* prev = &trace.start;
    for (const auto& r : recs) {
      ProxSpec spec{*prev, cfg.rho, cfg.prox_segments};
      double penalty = -prox_value(spec, domain, r.iterate);
      if (r.theta_exit + tol.monotone_slack < r.theta_entry + penalty)
        rep.descent_with_prox = false;
      prev = &r.iterate;
    }
  }
  rep.steps_converged = !recs.empty() && recs.back().step_norm <= cfg.step_tol;
  if (!recs.empty()) {
    const auto& x = recs.back().iterate;
    rep.final_feasible = original_feasible(x);
    EpsProblem last = family(recs.back().eps);
    rep.selection_singleton = enumerate_selections(last, x, 0.0).cardinality() == 1;
  } else {
    rep.final_feasible = original_feasible(trace.start);
  }
  return rep;
}

VerifyReport verify_run(const RunTrace& trace, const HeavisideProblem& p, const IdsaConfig& cfg,
                        const VerifyTolerances& tol) {
  EpsFamily family = [&p](double e) { return make_eps_problem(p, e); };
  auto feasible = [&p, &tol](std::span<const double> x) {
    return check_feasible(p, x, tol.feas_tau);
  };
  VerifyReport rep = verify_run(trace, family, feasible, p.domain, cfg, tol);
  const auto& x = trace.records.empty() ? trace.start : trace.records.back().iterate;
  auto sets = zero_index_sets(p, x, tol.zero_tol);
  auto scan = [&](const HeavisideExpr& e, std::size_t block) {
    for (std::size_t t = 0; t < e.terms.size(); ++t)
      if (e.terms[t].coeff < 0 && sets.cls[block][t] == TermSignClass::zero)
        rep.zero_negative_set_empty = false;
  };
  scan(p.objective, 0);
  for (std::size_t i = 0; i < p.constraints.size(); ++i) scan(p.constraints[i], i + 1);
  return rep;
}

}  // namespace hscop
