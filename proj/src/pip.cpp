#include "hscop/pip.hpp"

#include <algorithm>
#include <cmath>

namespace hscop {

double quantile_threshold(std::vector<double> values, double r, QuantileSide side) {
  if (r < 0.0 || r > 1.0) throw std::invalid_argument("quantile_threshold: r outside [0,1]");
  if (side == QuantileSide::upper) {
    for (auto& v : values) v = -v;
    return -quantile_threshold(std::move(values), r, QuantileSide::lower);
  }
  if (values.empty()) return kInf;
  if (r == 0.0) return -kInf;
  std::sort(values.begin(), values.end());
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(r * static_cast<double>(values.size())));
  rank = std::max<std::size_t>(rank, 1);
  return values[rank - 1];
}

PartitionResult partition_from_incumbent(const EpsProblem& p, std::span<const double> x_hat,
                                         double r, std::mt19937_64& rng) {
  if (x_hat.size() != p.dim())
    throw std::invalid_argument("partition_from_incumbent: dimension mismatch");
  PartitionResult out;
  out.partition.state.resize(p.num_blocks());

  std::uniform_int_distribution<int> coin(0, 1);
  for (std::size_t b = 0; b < p.num_blocks(); ++b) {
    const auto& terms = p.block(b).terms;
    out.partition.state[b].assign(terms.size(), TermState::free_binary);
    for (int family = 0; family < 2; ++family) {  // 0: psi > 0, 1: psi < 0
      bool positive = family == 0;
      std::vector<double> above, below;
      std::vector<std::pair<std::size_t, double>> members;
      for (std::size_t t = 0; t < terms.size(); ++t) {
        if ((terms[t].coeff > 0) != positive) continue;
        double inner = terms[t].inner.value(x_hat);
        double val = positive ? inner : -inner - p.eps;
        members.emplace_back(t, val);
        if (val > 0)
          above.push_back(val);
        else if (val < 0)
          below.push_back(val);
        else
          (coin(rng) == 0 ? above : below).push_back(val);
      }
      if (members.empty()) continue;
      double hi = quantile_threshold(above, r, QuantileSide::lower);
      double lo = quantile_threshold(below, r, QuantileSide::upper);
      if (std::isfinite(hi)) out.delta_min = std::min(out.delta_min, std::abs(hi));
      if (std::isfinite(lo)) out.delta_min = std::min(out.delta_min, std::abs(lo));
      for (auto [t, val] : members) {
        if (val > hi)
          out.partition.state[b][t] = TermState::fixed_one;
        else if (val < lo)
          out.partition.state[b][t] = TermState::fixed_zero;
      }
    }
  }
  return out;
}

double pip_objective(const PipProblem& prob, std::span<const double> x) {
  const EpsProblem& p = *prob.problem;
  double v = p.objective_value(x);
  if (prob.prox && prob.prox->rho > 0.0) v += prox_value(*prob.prox, p.domain, x);
  if (prob.residual_lambda > 0.0) {
    double worst = 0.0;
    for (const auto& c : p.constraints) worst = std::max(worst, -c.value(x, p.eps));
    v -= prob.residual_lambda * worst;
  }
  return v;
}

PipResult pip_solve(const PipProblem& prob, std::span<const double> x0, const PipConfig& cfg) {
  const EpsProblem& p = *prob.problem;
  if (x0.size() != p.dim()) throw std::invalid_argument("pip_solve: x0 dimension mismatch");
  if (!(cfg.r0 > 0.0 && cfg.r0 <= 1.0 && cfg.r_delta > 0.0))
    throw std::invalid_argument("pip_solve: invalid ratio configuration");

  std::mt19937_64 rng(cfg.seed);
  double big_m = prob.big_m > 0.0 ? prob.big_m : compute_big_m(p);

  MilpBuildOptions build_opts;
  build_opts.residual_lambda = prob.residual_lambda;
  build_opts.prox_segments = cfg.prox_segments;

  PipResult out;
  out.x.assign(x0.begin(), x0.end());
  out.objective = pip_objective(prob, x0);
  out.trace.objective_at_start = out.objective;

  double r = std::clamp(cfg.r0, cfg.r_min, cfg.r_max);
  int mu = 0, mu_tilde = 0;
  while (mu < cfg.mu_max && mu_tilde < cfg.mu_tilde_max) {
    PartitionResult pr = partition_from_incumbent(p, out.x, r, rng);
    MilpModel model = build_direct_ip(p, pr.partition, big_m, prob.prox, build_opts);
    MilpConfig sub = cfg.subproblem;
    sub.warm_x = lift_point(p, pr.partition, model, out.x);
    MilpSolution sol = solve_milp(model, sub);
    out.stats.nodes += sol.stats.nodes;
    out.stats.lp_iterations += sol.stats.lp_iterations;
    out.stats.wall_ms += sol.stats.wall_ms;
    if (!sol.has_solution()) {
      if (mu == 0) throw PipStartInfeasible();
      break;
    }

    double obj = sol.objective;
    PipIterate it;
    it.mu = mu;
    it.r = r;
    it.counts = pr.partition.counts();
    it.objective = obj;
    it.x.assign(sol.x.begin(), sol.x.begin() + model.num_structural);
    it.delta_min = pr.delta_min;
    it.stats = sol.stats;
    out.trace.iterates.push_back(std::move(it));

    bool stalled = std::abs(obj - out.objective) <= cfg.obj_eq_tol;
    out.x.assign(sol.x.begin(), sol.x.begin() + model.num_structural);
    out.objective = obj;
    if (model.residual_var >= 0)
      out.gamma = sol.x[static_cast<std::size_t>(model.residual_var)];
    if (stalled) {
      r = std::min(r + cfg.r_delta, cfg.r_max);
      ++mu_tilde;
    } else {
      mu_tilde = 0;
    }
    ++mu;
  }
  return out;
}

PipResult pip_solve(const DecomposedProblem& dec, std::span<const double> x0,
                    const PipConfig& cfg, double big_m, double residual_lambda) {
  PipProblem prob;
  prob.problem = &dec.surrogate;
  if (dec.rho > 0.0) prob.prox = ProxSpec{dec.center, dec.rho, cfg.prox_segments};
  prob.residual_lambda = residual_lambda;
  prob.big_m = big_m;
  return pip_solve(prob, x0, cfg);
}

}  // namespace hscop
