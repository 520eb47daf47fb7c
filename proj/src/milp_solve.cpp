#include <chrono>
#include <cmath>
#include <queue>

#include "hscop/milp.hpp"

namespace hscop {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_s(Clock::time_point from) {
  return std::chrono::duration<double>(Clock::now() - from).count();
}

bool lp_point_feasible(const LpModel& lp, std::span<const double> x, double tol) {
  for (int v = 0; v < lp.num_vars(); ++v) {
    double xv = x[static_cast<std::size_t>(v)];
    if (xv < lp.lower[static_cast<std::size_t>(v)] - tol ||
        xv > lp.upper[static_cast<std::size_t>(v)] + tol)
      return false;
  }
  for (const auto& row : lp.rows) {
    double s = 0.0;
    for (auto [v, c] : row.coef) s += c * x[static_cast<std::size_t>(v)];
    if (row.sense == RowSense::le && s > row.rhs + tol) return false;
    if (row.sense == RowSense::ge && s < row.rhs - tol) return false;
    if (row.sense == RowSense::eq && std::abs(s - row.rhs) > tol) return false;
  }
  return true;
}

double lp_objective_at(const LpModel& lp, std::span<const double> x) {
  double s = lp.obj_offset;
  for (int v = 0; v < lp.num_vars(); ++v) s += lp.obj[static_cast<std::size_t>(v)] * x[static_cast<std::size_t>(v)];
  return s;
}

}  // namespace

MilpSolution solve_milp(const MilpModel& model, const MilpConfig& cfg) {
  auto t0 = Clock::now();
  MilpSolution out;
  Simplex splx(model.lp);

  std::vector<int> binaries;
  for (int v = 0; v < model.lp.num_vars(); ++v)
    if (model.is_binary[static_cast<std::size_t>(v)]) binaries.push_back(v);

  std::vector<double> incumbent;
  double inc_obj = -kInf;
  auto last_progress = Clock::now();
  if (cfg.warm_x && cfg.warm_x->size() == static_cast<std::size_t>(model.lp.num_vars()) &&
      lp_point_feasible(model.lp, *cfg.warm_x, 1e-6)) {
    bool integral = true;
    for (int v : binaries) {
      double z = (*cfg.warm_x)[static_cast<std::size_t>(v)];
      if (std::abs(z - std::round(z)) > cfg.int_tol) {
        integral = false;
        break;
      }
    }
    if (integral) {
      incumbent = *cfg.warm_x;
      for (int v : binaries)
        incumbent[static_cast<std::size_t>(v)] = std::round(incumbent[static_cast<std::size_t>(v)]);
      inc_obj = lp_objective_at(model.lp, incumbent);
    }
  }

  struct Node {
    int parent = -1;
    int branch_var = -1;
    std::int8_t value = 0;
    double bound = kInf;
  };
  std::vector<Node> nodes;
  nodes.push_back({});
  struct QEntry {
    double bound;
    long id;
    bool operator<(const QEntry& o) const {
      if (bound != o.bound) return bound < o.bound;
      return id < o.id;  // dive into the newest node among equal bounds
    }
  };
  std::priority_queue<QEntry> open;
  open.push({kInf, 0});

  // the grid promise only holds for pure counting objectives
  double grid = cfg.objective_grid;
  if (model.residual_var >= 0 || model.prox) grid = 0.0;
  auto accept_gap = [&](double bound) {
    if (grid > 0.0 && std::isfinite(bound))
      bound = std::floor(bound / grid + 1e-9) * grid;
    return bound <= inc_obj + cfg.gap_tol * std::max(1.0, std::abs(inc_obj));
  };

  auto apply_node = [&](long id) {
    for (int v : binaries) splx.set_var_bounds(v, 0.0, 1.0);
    for (long cur = id; cur > 0; cur = nodes[static_cast<std::size_t>(cur)].parent) {
      const Node& nd = nodes[static_cast<std::size_t>(cur)];
      splx.set_var_bounds(nd.branch_var, nd.value, nd.value);
    }
  };

  MilpStatus status = MilpStatus::optimal;
  double best_open_bound = -kInf;
  while (!open.empty()) {
    QEntry top = open.top();
    if (accept_gap(top.bound)) {
      best_open_bound = top.bound;
      break;
    }
    if (std::isfinite(cfg.stop_gap) && !incumbent.empty() &&
        top.bound <= inc_obj + cfg.stop_gap * std::max(1.0, std::abs(inc_obj))) {
      status = MilpStatus::gap_limit;
      best_open_bound = top.bound;
      break;
    }
    if (out.stats.nodes >= cfg.node_limit) {
      status = MilpStatus::node_limit;
      best_open_bound = top.bound;
      break;
    }
    if (elapsed_s(t0) > cfg.time_limit_s) {
      status = MilpStatus::time_limit;
      best_open_bound = top.bound;
      break;
    }
    if (!incumbent.empty() && elapsed_s(last_progress) > cfg.stall_time_s) {
      status = MilpStatus::time_limit;
      best_open_bound = top.bound;
      break;
    }
    open.pop();
    ++out.stats.nodes;
    apply_node(top.id);
    LpSolution lp = splx.solve();
    if (lp.status == LpStatus::iteration_limit) {
      splx.invalidate_basis();
      lp = splx.solve();
    }
    out.stats.lp_iterations += lp.iterations;
    if (lp.status == LpStatus::infeasible) continue;
    if (lp.status == LpStatus::unbounded)
      throw std::runtime_error("solve_milp: relaxation unbounded; model bounds are missing");
    if (lp.status == LpStatus::iteration_limit)
      throw std::runtime_error("solve_milp: simplex iteration limit");
    double bound = lp.objective;
    if (accept_gap(bound)) continue;

    int branch_var = -1;
    double branch_score = cfg.int_tol;
    for (int v : binaries) {
      double z = lp.x[static_cast<std::size_t>(v)];
      double frac = z - std::floor(z);
      double score = std::min(frac, 1.0 - frac);
      if (score > branch_score) {
        branch_score = score;
        branch_var = v;
      }
    }
    if (branch_var < 0) {
      // integral solution
      std::vector<double> x = lp.x;
      x.resize(static_cast<std::size_t>(model.lp.num_vars()));
      for (int v : binaries) x[static_cast<std::size_t>(v)] = std::round(x[static_cast<std::size_t>(v)]);
      if (bound > inc_obj) {
        incumbent = std::move(x);
        inc_obj = bound;
        last_progress = Clock::now();
      }
      continue;
    }
    long id0 = static_cast<long>(nodes.size());
    nodes.push_back({static_cast<int>(top.id), branch_var, 0, bound});
    nodes.push_back({static_cast<int>(top.id), branch_var, 1, bound});
    open.push({bound, id0});
    open.push({bound, id0 + 1});
  }
  if (open.empty()) best_open_bound = inc_obj;

  if (incumbent.empty()) {
    out.status = status == MilpStatus::optimal ? MilpStatus::infeasible : status;
    out.stats.wall_ms = elapsed_s(t0) * 1000.0;
    return out;
  }

  out.status = status;
  out.x = incumbent;
  out.objective = inc_obj;
  out.best_bound = std::max(best_open_bound, inc_obj);

  if (cfg.polish) {
    // Re-solve the LP with binaries pinned and active indicator rows nudged
    // strictly inside, so exact sign tests at the reported point agree with
    // the binary assignment.
    for (int v : binaries) {
      double z = incumbent[static_cast<std::size_t>(v)];
      splx.set_var_bounds(v, z, z);
    }
    for (double margin = cfg.polish_margin; margin > cfg.polish_margin * 1e-3; margin *= 0.1) {
      for (std::size_t r = 0; r < model.row_polish.size(); ++r) {
        const auto& pol = model.row_polish[r];
        if (pol.mode == 0) continue;
        bool active = pol.mode == 1 ||
                      (pol.link_var >= 0 && incumbent[static_cast<std::size_t>(pol.link_var)] > 0.5);
        double shift = active ? pol.dir * margin : 0.0;
        splx.set_row_rhs(static_cast<int>(r), model.lp.rows[r].rhs + shift);
      }
      LpSolution lp = splx.solve();
      out.stats.lp_iterations += lp.iterations;
      if (lp.status == LpStatus::optimal) {
        for (int v = 0; v < model.lp.num_vars(); ++v)
          if (!model.is_binary[static_cast<std::size_t>(v)])
            out.x[static_cast<std::size_t>(v)] = lp.x[static_cast<std::size_t>(v)];
        out.objective = lp_objective_at(model.lp, out.x);
        break;
      }
    }
  }
  out.stats.wall_ms = elapsed_s(t0) * 1000.0;
  return out;
}

bool milp_point_feasible(const MilpModel& model, std::span<const double> x, double tol) {
  if (x.size() != static_cast<std::size_t>(model.lp.num_vars())) return false;
  for (int v = 0; v < model.lp.num_vars(); ++v)
    if (model.is_binary[static_cast<std::size_t>(v)]) {
      double z = x[static_cast<std::size_t>(v)];
      if (std::abs(z - std::round(z)) > tol) return false;
    }
  return lp_point_feasible(model.lp, x, tol);
}

std::vector<double> lift_point(const EpsProblem& p, const IndexPartition& part,
                               const MilpModel& model, std::span<const double> x) {
  std::vector<double> full(static_cast<std::size_t>(model.lp.num_vars()), 0.0);
  for (int j = 0; j < model.num_structural; ++j)
    full[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)];

  auto term_on = [&](std::size_t b, std::size_t t) {
    const EpsTerm& term = p.block(b).terms[t];
    switch (part.at(b, t)) {
      case TermState::fixed_one: return true;
      case TermState::fixed_zero: return false;
      case TermState::free_binary: break;
    }
    double inner = term.inner.value(x);
    return term.coeff > 0 ? inner >= 0.0 : inner <= -p.eps;
  };

  double worst_violation = 0.0;
  for (std::size_t b = 0; b < p.num_blocks(); ++b) {
    const EpsExpr& e = p.block(b);
    double row_value = e.linear.value(x);
    for (std::size_t t = 0; t < e.terms.size(); ++t) {
      bool on = term_on(b, t);
      const EpsTerm& term = e.terms[t];
      double indicator = term.kind == EpsKind::closed_at_zero ? (on ? 1.0 : 0.0) : (on ? 0.0 : 1.0);
      row_value += term.coeff * indicator;
      int zv = model.z_index[b][t];
      if (zv >= 0) full[static_cast<std::size_t>(zv)] = on ? 1.0 : 0.0;
    }
    if (b > 0) worst_violation = std::max(worst_violation, -row_value);
  }
  if (model.residual_var >= 0)
    full[static_cast<std::size_t>(model.residual_var)] = std::max(0.0, worst_violation);

  for (const auto& a : model.aux) {
    switch (a.role) {
      case 'u':
        full[static_cast<std::size_t>(a.var)] =
            p.block(static_cast<std::size_t>(a.block)).terms[static_cast<std::size_t>(a.term)].inner.min_part(x);
        break;
      case 'v':
        full[static_cast<std::size_t>(a.var)] =
            p.block(static_cast<std::size_t>(a.block)).terms[static_cast<std::size_t>(a.term)].inner.max_part(x);
        break;
      case 'q': {
        if (!model.prox) break;
        auto cuts = encode_prox(model.prox->center, model.prox->rho, p.domain, model.prox->segments);
        double q = 0.0;
        for (const auto& cut : cuts[static_cast<std::size_t>(a.term)])
          q = std::min(q, cut.slope * x[static_cast<std::size_t>(a.term)] + cut.offset);
        full[static_cast<std::size_t>(a.var)] = q;
        break;
      }
      case 'k':
      case 'l': {
        const PAFunction& f =
            p.block(static_cast<std::size_t>(a.block)).terms[static_cast<std::size_t>(a.term)].inner;
        bool on = term_on(static_cast<std::size_t>(a.block), static_cast<std::size_t>(a.term));
        double val = 0.0;
        if (on) {
          std::size_t best = 0;
          if (a.role == 'k') {
            for (std::size_t k = 1; k < f.cvx.size(); ++k)
              if (f.cvx[k].value(x) > f.cvx[best].value(x)) best = k;
          } else {
            for (std::size_t l = 1; l < f.cve.size(); ++l)
              if (f.cve[l].value(x) < f.cve[best].value(x)) best = l;
          }
          val = best == static_cast<std::size_t>(a.piece) ? 1.0 : 0.0;
        }
        full[static_cast<std::size_t>(a.var)] = val;
        break;
      }
      default: break;
    }
  }
  return full;
}

}  // namespace hscop
