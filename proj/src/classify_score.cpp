#include <algorithm>
#include <chrono>
#include <cmath>

#include "hscop/classify.hpp"
#include "hscop/oracle.hpp"

namespace hscop {

int ScoreModel::predict(std::span<const double> x) const {
  int best = 0;
  double best_score = -kInf;
  for (std::size_t j = 0; j < W.size(); ++j) {
    double s = b[j];
    for (std::size_t f = 0; f < x.size(); ++f) s += W[j][f] * x[f];
    if (s > best_score) {
      best_score = s;
      best = static_cast<int>(j);
    }
  }
  return best;
}

std::vector<int> predict_all(const ScoreModel& m, const Dataset& d) {
  std::vector<int> out;
  out.reserve(d.size());
  for (const auto& row : d.X) out.push_back(m.predict(row));
  return out;
}

Metrics compute_metrics(const std::vector<int>& predictions, const std::vector<int>& labels,
                        int num_classes) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("compute_metrics: length mismatch");
  Metrics m;
  std::vector<int> predicted(static_cast<std::size_t>(num_classes), 0);
  std::vector<int> correct(static_cast<std::size_t>(num_classes), 0);
  std::vector<int> actual(static_cast<std::size_t>(num_classes), 0);
  int hits = 0;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    ++predicted[static_cast<std::size_t>(predictions[s])];
    ++actual[static_cast<std::size_t>(labels[s])];
    if (predictions[s] == labels[s]) {
      ++hits;
      ++correct[static_cast<std::size_t>(labels[s])];
    }
  }
  m.accuracy = static_cast<double>(hits) / static_cast<double>(labels.size());
  m.precision.resize(static_cast<std::size_t>(num_classes));
  m.recall.resize(static_cast<std::size_t>(num_classes), 0.0);
  for (int j = 0; j < num_classes; ++j) {
    std::size_t js = static_cast<std::size_t>(j);
    if (predicted[js] > 0)
      m.precision[js] = static_cast<double>(correct[js]) / predicted[js];
    if (actual[js] > 0) m.recall[js] = static_cast<double>(correct[js]) / actual[js];
  }
  return m;
}

namespace {

// score difference h_{m,l}(x) = (w_m - w_l).X + (b_m - b_l) as an affine
// function of the flattened decision vector
AffineFn score_margin(int m, int l, std::span<const double> sample, int p, int J, int total) {
  AffineFn h;
  h.coef.assign(static_cast<std::size_t>(total), 0.0);
  for (int f = 0; f < p; ++f) {
    h.coef[static_cast<std::size_t>(m * p + f)] += sample[static_cast<std::size_t>(f)];
    h.coef[static_cast<std::size_t>(l * p + f)] -= sample[static_cast<std::size_t>(f)];
  }
  h.coef[static_cast<std::size_t>(J * p + m)] += 1.0;
  h.coef[static_cast<std::size_t>(J * p + l)] -= 1.0;
  return h;
}

}  // namespace

ScoreProblemSpec build_score_problem(const Dataset& d, const ScoreProblemOptions& opts) {
  d.validate();
  int p = static_cast<int>(d.features());
  int J = d.num_classes;
  int N = static_cast<int>(d.size());
  if (J < 2) throw std::invalid_argument("build_score_problem: need at least two classes");
  for (auto [cls, beta] : opts.precision_floors) {
    if (cls < 0 || cls >= J) throw std::invalid_argument("build_score_problem: bad class id");
    if (!(beta > 0.0 && beta < 1.0))
      throw std::invalid_argument("build_score_problem: beta must lie in (0,1)");
  }
  if (!(opts.margin > 0.0)) throw std::invalid_argument("build_score_problem: margin <= 0");

  ScoreProblemSpec spec;
  spec.p = p;
  spec.J = J;
  spec.opts = opts;
  if (spec.opts.default_recall_floors)
    for (auto [cls, beta] : opts.precision_floors) spec.opts.recall_floors.emplace(cls, 0.1);

  int model_vars = (p + 1) * J;
  int split_base = model_vars;
  int total = model_vars + 2 * p * J;

  ProductProblem& prob = spec.problem;
  prob.domain.lower.assign(static_cast<std::size_t>(total), 0.0);
  prob.domain.upper.assign(static_cast<std::size_t>(total), opts.tau);
  for (int v = 0; v < model_vars; ++v)
    prob.domain.lower[static_cast<std::size_t>(v)] = -opts.tau;

  // l1 budget per class through split variables: w = w+ - w-, sum w+ + w- <= tau
  for (int j = 0; j < J; ++j) {
    LinearRow budget;
    budget.coef.assign(static_cast<std::size_t>(total), 0.0);
    for (int f = 0; f < p; ++f) {
      budget.coef[static_cast<std::size_t>(split_base + j * p + f)] = 1.0;
      budget.coef[static_cast<std::size_t>(split_base + p * J + j * p + f)] = 1.0;
    }
    budget.sense = RowSense::le;
    budget.rhs = opts.tau;
    prob.domain.rows.push_back(std::move(budget));
    for (int f = 0; f < p; ++f) {
      LinearRow link;
      link.coef.assign(static_cast<std::size_t>(total), 0.0);
      link.coef[static_cast<std::size_t>(j * p + f)] = 1.0;
      link.coef[static_cast<std::size_t>(split_base + j * p + f)] = -1.0;
      link.coef[static_cast<std::size_t>(split_base + p * J + j * p + f)] = 1.0;
      link.sense = RowSense::eq;
      link.rhs = 0.0;
      prob.domain.rows.push_back(std::move(link));
    }
  }

  prob.objective.linear = AffineFn(std::vector<double>(static_cast<std::size_t>(total), 0.0), 0.0);

  // out-of-margin accuracy: one closed term per sample
  for (int s = 0; s < N; ++s) {
    std::vector<AffineFn> pieces;
    for (int j = 0; j < J; ++j) {
      if (j == d.y[static_cast<std::size_t>(s)]) continue;
      AffineFn h = score_margin(d.y[static_cast<std::size_t>(s)], j,
                                d.X[static_cast<std::size_t>(s)], p, J, total);
      h.offset -= opts.margin;
      pieces.push_back(std::move(h));
    }
    ProductTerm t;
    t.coeff = 1.0 / N;
    t.closed_inner = PAFunction::pure_min(std::move(pieces));
    prob.objective.terms.push_back(std::move(t));
  }

  auto routed_factors = [&](int j, int s) {
    ProductTerm t;
    std::vector<AffineFn> above, below;
    for (int m = j + 1; m < J; ++m)
      above.push_back(score_margin(j, m, d.X[static_cast<std::size_t>(s)], p, J, total));
    for (int l = 0; l < j; ++l)
      below.push_back(score_margin(j, l, d.X[static_cast<std::size_t>(s)], p, J, total));
    if (!above.empty()) t.closed_inner = PAFunction::pure_min(std::move(above));
    if (!below.empty()) t.open_inner = PAFunction::pure_min(std::move(below));
    return t;
  };

  for (auto [j, beta] : spec.opts.precision_floors) {
    ProductExpr precision;
    precision.linear = AffineFn(std::vector<double>(static_cast<std::size_t>(total), 0.0), 0.0);
    for (int s = 0; s < N; ++s) {
      if (d.y[static_cast<std::size_t>(s)] == j) {
        ProductTerm t = routed_factors(j, s);
        t.coeff = 1.0;
        precision.terms.push_back(std::move(t));
      }
      ProductTerm t = routed_factors(j, s);
      t.coeff = -beta;
      precision.terms.push_back(std::move(t));
    }
    prob.constraints.push_back(std::move(precision));

    ProductExpr nonempty;  // the precision denominator must count someone
    nonempty.linear = AffineFn(std::vector<double>(static_cast<std::size_t>(total), 0.0), -1.0);
    for (int s = 0; s < N; ++s) {
      ProductTerm t = routed_factors(j, s);
      t.coeff = 1.0;
      nonempty.terms.push_back(std::move(t));
    }
    prob.constraints.push_back(std::move(nonempty));
  }

  for (auto [j, alpha] : spec.opts.recall_floors) {
    int class_count = d.class_counts()[static_cast<std::size_t>(j)];
    ProductExpr recall;
    recall.linear = AffineFn(std::vector<double>(static_cast<std::size_t>(total), 0.0),
                             -alpha * class_count);
    for (int s = 0; s < N; ++s) {
      if (d.y[static_cast<std::size_t>(s)] != j) continue;
      ProductTerm t = routed_factors(j, s);
      t.coeff = 1.0;
      recall.terms.push_back(std::move(t));
    }
    prob.constraints.push_back(std::move(recall));
  }

  double xmax = 0.0;
  for (const auto& row : d.X)
    for (double v : row) xmax = std::max(xmax, std::abs(v));
  spec.big_m_floor = 20.0 * xmax + 120.0;
  return spec;
}

ScoreModel ScoreProblemSpec::decode(std::span<const double> x) const {
  ScoreModel m;
  m.W.assign(static_cast<std::size_t>(J), std::vector<double>(static_cast<std::size_t>(p), 0.0));
  m.b.assign(static_cast<std::size_t>(J), 0.0);
  for (int j = 0; j < J; ++j) {
    for (int f = 0; f < p; ++f) m.W[static_cast<std::size_t>(j)][static_cast<std::size_t>(f)] =
        x[static_cast<std::size_t>(j * p + f)];
    m.b[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(J * p + j)];
  }
  return m;
}

ParetoResult pareto_sweep(const std::vector<double>& betas, const ParetoSolver& solve) {
  if (betas.empty()) throw std::invalid_argument("pareto_sweep: no thresholds");
  ParetoResult out;
  out.points.reserve(betas.size());
  for (double beta : betas) {
    try {
      out.points.push_back(solve(beta));
    } catch (const std::exception&) {
      ParetoPoint failed;
      failed.beta = beta;
      out.points.push_back(failed);
    }
  }
  auto front = [&](auto acc, auto prec) {
    std::vector<int> keep;
    for (std::size_t i = 0; i < out.points.size(); ++i) {
      if (!out.points[i].feasible || !prec(out.points[i])) continue;
      bool dominated = false;
      for (std::size_t k = 0; k < out.points.size(); ++k) {
        if (k == i || !out.points[k].feasible || !prec(out.points[k])) continue;
        double ai = acc(out.points[i]), ak = acc(out.points[k]);
        double pi = *prec(out.points[i]), pk = *prec(out.points[k]);
        if (ak >= ai && pk >= pi && (ak > ai || pk > pi)) {
          dominated = true;
          break;
        }
      }
      if (!dominated) keep.push_back(static_cast<int>(i));
    }
    return keep;
  };
  out.train_front = front([](const ParetoPoint& p) { return p.train.accuracy; },
                          [](const ParetoPoint& p) { return p.train_precision; });
  out.test_front = front([](const ParetoPoint& p) { return p.test.accuracy; },
                         [](const ParetoPoint& p) { return p.test_precision; });
  return out;
}

}  // namespace hscop

namespace hscop {

ScoreModel nearest_mean_model(const Dataset& d, double tau) {
  std::size_t p = d.features();
  ScoreModel m;
  m.W.assign(static_cast<std::size_t>(d.num_classes), std::vector<double>(p, 0.0));
  m.b.assign(static_cast<std::size_t>(d.num_classes), 0.0);
  std::vector<int> counts = d.class_counts();
  for (std::size_t s = 0; s < d.size(); ++s)
    for (std::size_t f = 0; f < p; ++f)
      m.W[static_cast<std::size_t>(d.y[s])][f] += d.X[s][f];
  for (int j = 0; j < d.num_classes; ++j) {
    std::size_t js = static_cast<std::size_t>(j);
    if (counts[js] == 0) continue;
    double norm2 = 0.0;
    for (auto& w : m.W[js]) {
      w /= counts[js];
      norm2 += w * w;
    }
    m.b[js] = -0.5 * norm2;
  }
  // common scale keeps the argmax and sharpens margins up to the l1 budget
  double worst = 1e-12;
  for (int j = 0; j < d.num_classes; ++j) {
    std::size_t js = static_cast<std::size_t>(j);
    double l1 = std::abs(m.b[js]);
    double wsum = 0.0;
    for (double w : m.W[js]) wsum += std::abs(w);
    worst = std::max({worst, l1, wsum});
  }
  double scale = tau / worst;
  for (int j = 0; j < d.num_classes; ++j) {
    std::size_t js = static_cast<std::size_t>(j);
    for (auto& w : m.W[js]) w *= scale;
    m.b[js] *= scale;
  }
  return m;
}

std::vector<double> flatten_score_model(const ScoreProblemSpec& spec, const ScoreModel& m) {
  std::vector<double> x(spec.problem.dim(), 0.0);
  int p = spec.p, J = spec.J;
  int split_base = spec.model_vars();
  for (int j = 0; j < J; ++j) {
    for (int f = 0; f < p; ++f) {
      double w = m.W[static_cast<std::size_t>(j)][static_cast<std::size_t>(f)];
      x[static_cast<std::size_t>(j * p + f)] = w;
      x[static_cast<std::size_t>(split_base + j * p + f)] = std::max(0.0, w);
      x[static_cast<std::size_t>(split_base + p * J + j * p + f)] = std::max(0.0, -w);
    }
    x[static_cast<std::size_t>(J * p + j)] = m.b[static_cast<std::size_t>(j)];
  }
  return x;
}

ScoreOutcome solve_score_problem(const ScoreProblemSpec& spec, const Dataset& d,
                                 const ScoreSolveConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  EpsFamily family = [&spec](double e) { return flatten_products(spec.problem, e); };

  IdsaConfig idsa = cfg.idsa;
  idsa.big_m_floor = std::max(idsa.big_m_floor, spec.big_m_floor);
  idsa.pip.seed = cfg.seed;

  ScoreOutcome out;
  std::vector<double> warm =
      flatten_score_model(spec, nearest_mean_model(d, spec.opts.tau));

  double eps0 = cfg.method == SolveMethod::idsa_pip || cfg.method == SolveMethod::isa_pip
                    ? idsa.eps_schedule.front()
                    : cfg.fixed_eps;
  std::vector<double> x0 = bootstrap_feasible(family, eps0, idsa, warm);

  switch (cfg.method) {
    case SolveMethod::oracle: {
      EpsProblem e = family(cfg.fixed_eps);
      OracleOptions oo;
      oo.max_bits = cfg.oracle_bits;
      OracleResult r = oracle_solve(e, oo);
      if (r.feasible) out.x = r.x;
      break;
    }
    case SolveMethod::full_mip: {
      EpsProblem e = family(cfg.fixed_eps);
      double big_m = std::max(compute_big_m(e), spec.big_m_floor);
      IndexPartition part = IndexPartition::all_free(e);
      MilpModel model = build_direct_ip(e, part, big_m, std::nullopt, {});
      MilpConfig run = cfg.full_mip;
      auto lifted = lift_point(e, part, model, x0);
      if (milp_point_feasible(model, lifted, 1e-6)) run.warm_x = lifted;
      MilpSolution sol = solve_milp(model, run);
      out.stats = sol.stats;
      if (sol.has_solution())
        out.x.assign(sol.x.begin(), sol.x.begin() + model.num_structural);
      break;
    }
    case SolveMethod::pip: {
      EpsProblem e = family(cfg.fixed_eps);
      PipProblem prob;
      prob.problem = &e;
      if (idsa.rho > 0.0) prob.prox = ProxSpec{x0, idsa.rho, idsa.prox_segments};
      prob.big_m = std::max(compute_big_m(e), spec.big_m_floor);
      PipConfig pcfg = idsa.pip;
      pcfg.seed = cfg.seed;
      PipResult res = pip_solve(prob, x0, pcfg);
      out.x = res.x;
      out.stats = res.stats;
      break;
    }
    case SolveMethod::isa_pip:
    case SolveMethod::idsa_pip: {
      idsa.decompose = cfg.method == SolveMethod::idsa_pip;
      idsa.inner = IdsaConfig::Inner::pip;
      IdsaResult res = idsa_run(family, idsa, x0);
      out.x = res.x;
      out.trace = std::move(res.trace);
      for (const auto& r : out.trace.records) {
        out.stats.nodes += r.stats.nodes;
        out.stats.lp_iterations += r.stats.lp_iterations;
      }
      break;
    }
  }

  if (!out.x.empty()) {
    out.feasible = check_feasible(spec.problem, out.x);
    out.objective = spec.problem.objective_value(out.x);
    out.model = spec.decode(out.x);
  }
  out.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace hscop
