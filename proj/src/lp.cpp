#include "hscop/lp.hpp"

#include <algorithm>
#include <cassert>
#include <cstring>

namespace hscop {

namespace {

enum class VStat : std::uint8_t { basic, at_lower, at_upper, at_free };

}  // namespace

struct Simplex::Impl {
  LpOptions opt;
  int n = 0;       // structural columns
  int m = 0;       // rows
  int ncols = 0;   // n + m (slacks appended)
  std::vector<double> lb, ub, cost;  // internal minimization costs (-obj)
  std::vector<double> rhs;
  double obj_offset = 0.0;
  // column-major sparse matrix of [A | I]
  std::vector<std::vector<std::pair<int, double>>> cols;

  // basis state
  bool basis_valid = false;
  std::vector<int> basis;        // column basic in each row
  std::vector<VStat> stat;       // per column
  std::vector<double> xval;      // per column
  std::vector<double> binv;      // column-major m*m, binv[k*m+i] = (B^-1)_{i,k}
  long iterations = 0;
  long max_iterations = 0;
  bool bland = false;
  int stall = 0;
  double last_objective = kInf;

  // scratch
  std::vector<double> w, y, phase_cost;

  explicit Impl(const LpModel& model, const LpOptions& options) : opt(options) {
    n = model.num_vars();
    m = static_cast<int>(model.rows.size());
    ncols = n + m;
    lb = model.lower;
    ub = model.upper;
    cost.resize(ncols, 0.0);
    for (int j = 0; j < n; ++j) cost[j] = -model.obj[j];
    obj_offset = model.obj_offset;
    lb.resize(ncols);
    ub.resize(ncols);
    rhs.resize(m);
    cols.resize(ncols);
    for (int i = 0; i < m; ++i) {
      const LpRow& r = model.rows[i];
      rhs[i] = r.rhs;
      for (auto [j, v] : r.coef)
        if (v != 0.0) cols[j].emplace_back(i, v);
      int s = n + i;
      cols[s].emplace_back(i, 1.0);
      switch (r.sense) {
        case RowSense::le: lb[s] = 0.0; ub[s] = kInf; break;
        case RowSense::ge: lb[s] = -kInf; ub[s] = 0.0; break;
        case RowSense::eq: lb[s] = 0.0; ub[s] = 0.0; break;
      }
    }
    max_iterations = opt.max_iterations > 0
                         ? opt.max_iterations
                         : std::max<long>(20000, 200L * (m + n));
    w.resize(m);
    y.resize(m);
    phase_cost.resize(m);
  }

  double bound_value(int j) const {
    if (std::isfinite(lb[j])) return lb[j];
    if (std::isfinite(ub[j])) return ub[j];
    return 0.0;
  }

  VStat bound_stat(int j) const {
    if (std::isfinite(lb[j])) return VStat::at_lower;
    if (std::isfinite(ub[j])) return VStat::at_upper;
    return VStat::at_free;
  }

  void slack_basis() {
    basis.resize(m);
    stat.assign(ncols, VStat::at_lower);
    xval.assign(ncols, 0.0);
    for (int j = 0; j < ncols; ++j) {
      stat[j] = bound_stat(j);
      xval[j] = bound_value(j);
    }
    for (int i = 0; i < m; ++i) {
      basis[i] = n + i;
      stat[n + i] = VStat::basic;
    }
    basis_valid = true;
    bland = false;
    stall = 0;
  }

  // Dense Gauss-Jordan inversion of the basis matrix.  Returns false when the
  // basis is numerically singular.
  bool refactor() {
    std::vector<double> a(static_cast<std::size_t>(m) * m, 0.0);  // column-major
    for (int k = 0; k < m; ++k)
      for (auto [i, v] : cols[basis[k]]) a[static_cast<std::size_t>(k) * m + i] = v;
    binv.assign(static_cast<std::size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i) binv[static_cast<std::size_t>(i) * m + i] = 1.0;
    std::vector<int> perm(m);
    for (int i = 0; i < m; ++i) perm[i] = i;
    for (int col = 0; col < m; ++col) {
      int piv = -1;
      double best = 1e-11;
      for (int i = col; i < m; ++i) {
        double v = std::abs(a[static_cast<std::size_t>(col) * m + i]);
        if (v > best) {
          best = v;
          piv = i;
        }
      }
      if (piv < 0) return false;
      if (piv != col) {
        for (int k = 0; k < m; ++k) {
          std::swap(a[static_cast<std::size_t>(k) * m + piv],
                    a[static_cast<std::size_t>(k) * m + col]);
          std::swap(binv[static_cast<std::size_t>(k) * m + piv],
                    binv[static_cast<std::size_t>(k) * m + col]);
        }
      }
      double d = a[static_cast<std::size_t>(col) * m + col];
      double inv = 1.0 / d;
      for (int k = 0; k < m; ++k) {
        a[static_cast<std::size_t>(k) * m + col] *= inv;
        binv[static_cast<std::size_t>(k) * m + col] *= inv;
      }
      for (int i = 0; i < m; ++i) {
        if (i == col) continue;
        double f = a[static_cast<std::size_t>(col) * m + i];
        if (f == 0.0) continue;
        for (int k = 0; k < m; ++k) {
          a[static_cast<std::size_t>(k) * m + i] -= f * a[static_cast<std::size_t>(k) * m + col];
          binv[static_cast<std::size_t>(k) * m + i] -=
              f * binv[static_cast<std::size_t>(k) * m + col];
        }
      }
    }
    return true;
  }

  // x_B = B^-1 (rhs - sum of nonbasic columns at their values)
  void compute_basics() {
    std::vector<double> r = rhs;
    for (int j = 0; j < ncols; ++j) {
      if (stat[j] == VStat::basic) continue;
      xval[j] = stat[j] == VStat::at_lower ? lb[j] : (stat[j] == VStat::at_upper ? ub[j] : 0.0);
      if (xval[j] == 0.0) continue;
      for (auto [i, v] : cols[j]) r[i] -= v * xval[j];
    }
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int k = 0; k < m; ++k) s += binv[static_cast<std::size_t>(k) * m + i] * r[k];
      xval[basis[i]] = s;
    }
  }

  void ftran(int j, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (auto [r, v] : cols[j]) {
      const double* col = &binv[static_cast<std::size_t>(r) * m];
      for (int i = 0; i < m; ++i) out[i] += v * col[i];
    }
  }

  // y with y^T B = c_B^T for the given basic cost vector.
  void btran(const std::vector<double>& cb, std::vector<double>& out) {
    for (int k = 0; k < m; ++k) {
      const double* col = &binv[static_cast<std::size_t>(k) * m];
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += cb[i] * col[i];
      out[k] = s;
    }
  }

  double reduced_cost(int j, const std::vector<double>& yv, double cj) const {
    double s = cj;
    for (auto [i, v] : cols[j]) s -= yv[i] * v;
    return s;
  }

  void update_binv(int leave_row, const std::vector<double>& wcol) {
    double piv = wcol[leave_row];
    for (int k = 0; k < m; ++k) {
      double* col = &binv[static_cast<std::size_t>(k) * m];
      double t = col[leave_row];
      if (t == 0.0) continue;
      double f = t / piv;
      for (int i = 0; i < m; ++i) col[i] -= f * wcol[i];
      col[leave_row] = f;
    }
  }

  double infeasibility() const {
    double f = 0.0;
    for (int i = 0; i < m; ++i) {
      int j = basis[i];
      if (xval[j] < lb[j] - opt.feas_tol) f += lb[j] - xval[j];
      if (xval[j] > ub[j] + opt.feas_tol) f += xval[j] - ub[j];
    }
    return f;
  }

  // Runs one simplex phase.  phase1 = minimize infeasibility of the basics;
  // phase2 = minimize `cost`.  Returns optimal / infeasible / unbounded /
  // iteration_limit in the phase's own sense.
  LpStatus run_phase(bool phase1) {
    int refresh = 0;
    while (true) {
      if (iterations >= max_iterations) return LpStatus::iteration_limit;
      if (refresh++ >= opt.refactor_every) {
        if (!refactor()) {
          slack_basis();
          if (!refactor()) return LpStatus::iteration_limit;
        }
        compute_basics();
        refresh = 0;
      }

      // Pricing costs for this phase.
      double finfeas = 0.0;
      if (phase1) {
        for (int i = 0; i < m; ++i) {
          int j = basis[i];
          if (xval[j] < lb[j] - opt.feas_tol) {
            phase_cost[i] = -1.0;
            finfeas += lb[j] - xval[j];
          } else if (xval[j] > ub[j] + opt.feas_tol) {
            phase_cost[i] = 1.0;
            finfeas += xval[j] - ub[j];
          } else {
            phase_cost[i] = 0.0;
          }
        }
        if (finfeas <= opt.feas_tol) return LpStatus::optimal;
      } else {
        for (int i = 0; i < m; ++i) phase_cost[i] = cost[basis[i]];
      }
      btran(phase_cost, y);

      // Entering column.
      int enter = -1;
      int dir = 0;
      double best = phase1 ? -opt.feas_tol : -opt.opt_tol;
      for (int j = 0; j < ncols; ++j) {
        if (stat[j] == VStat::basic) continue;
        if (lb[j] == ub[j]) continue;  // fixed
        double rc = reduced_cost(j, y, phase1 ? 0.0 : cost[j]);
        if (stat[j] != VStat::at_upper && rc < best) {  // increase from lower/free
          if (bland) {
            enter = j;
            dir = 1;
            break;
          }
          best = rc;
          enter = j;
          dir = 1;
        }
        if (stat[j] != VStat::at_lower && -rc < best) {  // decrease from upper/free
          if (bland) {
            enter = j;
            dir = -1;
            break;
          }
          best = -rc;
          enter = j;
          dir = -1;
        }
        if (bland && enter >= 0) break;
      }
      if (enter < 0) return phase1 ? LpStatus::infeasible : LpStatus::optimal;

      ftran(enter, w);

      // Ratio test.  Basic i moves at rate -dir*w[i].
      double tmax = kInf;
      if (std::isfinite(lb[enter]) && std::isfinite(ub[enter])) tmax = ub[enter] - lb[enter];
      double tbest = tmax;
      int leave = -1;
      double leave_pivot = 0.0;
      bool leave_at_upper = false;
      for (int i = 0; i < m; ++i) {
        double wi = w[i];
        if (std::abs(wi) <= opt.pivot_tol) continue;
        int j = basis[i];
        double rate = -dir * wi;  // dx_Bi/dt
        double t = kInf;
        bool to_upper = false;
        bool below = xval[j] < lb[j] - opt.feas_tol;
        bool above = xval[j] > ub[j] + opt.feas_tol;
        if (phase1 && below) {
          if (rate > 0) {  // rising toward its violated lower bound
            t = (lb[j] - xval[j]) / rate;
            to_upper = false;
          }
        } else if (phase1 && above) {
          if (rate < 0) {
            t = (xval[j] - ub[j]) / (-rate);
            to_upper = true;
          }
        } else {
          if (rate < 0 && std::isfinite(lb[j])) {
            t = (xval[j] - lb[j]) / (-rate);
            to_upper = false;
          } else if (rate > 0 && std::isfinite(ub[j])) {
            t = (ub[j] - xval[j]) / rate;
            to_upper = true;
          }
        }
        if (t == kInf) continue;
        if (t < -1e-12) t = 0.0;
        bool take = false;
        if (t < tbest - 1e-10) {
          take = true;
        } else if (t < tbest + 1e-10 && leave >= 0) {
          take = bland ? basis[i] < basis[leave] : std::abs(wi) > std::abs(leave_pivot);
        }
        if (take) {
          tbest = t;
          leave = i;
          leave_pivot = wi;
          leave_at_upper = to_upper;
        }
      }

      if (tbest == kInf) {
        if (phase1) return LpStatus::infeasible;  // defensive; should not happen
        return LpStatus::unbounded;
      }

      ++iterations;
      double step = std::max(tbest, 0.0);
      // Move entering variable and basics.
      double enter_from = xval[enter];
      if (step != 0.0) {
        for (int i = 0; i < m; ++i)
          if (w[i] != 0.0) xval[basis[i]] -= dir * step * w[i];
      }
      if (leave < 0) {
        // bound flip
        xval[enter] = dir > 0 ? ub[enter] : lb[enter];
        stat[enter] = dir > 0 ? VStat::at_upper : VStat::at_lower;
      } else {
        int out = basis[leave];
        xval[out] = leave_at_upper ? ub[out] : lb[out];
        stat[out] = leave_at_upper ? VStat::at_upper : VStat::at_lower;
        if (!std::isfinite(xval[out])) {
          xval[out] = 0.0;
          stat[out] = VStat::at_free;
        }
        xval[enter] = enter_from + dir * step;
        stat[enter] = VStat::basic;
        basis[leave] = enter;
        update_binv(leave, w);
      }

      // Stall detection drives the Bland fallback.
      double measure = phase1 ? finfeas : current_cost();
      if (measure < last_objective - 1e-12) {
        last_objective = measure;
        stall = 0;
      } else if (++stall > opt.stall_before_bland) {
        bland = true;
      }
    }
  }

  double current_cost() const {
    double s = 0.0;
    for (int j = 0; j < ncols; ++j)
      if (cost[j] != 0.0) s += cost[j] * xval[j];
    return s;
  }

  LpSolution solve() {
    if (!basis_valid) slack_basis();
    if (!refactor()) {
      slack_basis();
      refactor();
    }
    compute_basics();
    iterations = 0;
    bland = false;
    stall = 0;
    last_objective = kInf;

    LpSolution sol;
    LpStatus st = run_phase(true);
    if (st == LpStatus::optimal) {
      last_objective = kInf;
      stall = 0;
      bland = false;
      st = run_phase(false);
      if (st == LpStatus::optimal) {
        // Refresh the factorization once and verify; repair if drifted.
        for (int round = 0; round < 2; ++round) {
          if (!refactor()) break;
          compute_basics();
          if (infeasibility() <= opt.feas_tol * 10) break;
          st = run_phase(true);
          if (st == LpStatus::optimal) st = run_phase(false);
          if (st != LpStatus::optimal) break;
        }
      }
    }
    sol.status = st;
    sol.iterations = iterations;
    if (st == LpStatus::optimal || st == LpStatus::unbounded) {
      sol.x.assign(xval.begin(), xval.begin() + n);
      double obj = obj_offset;
      for (int j = 0; j < n; ++j) obj += -cost[j] * xval[j];
      sol.objective = obj;
    }
    if (st == LpStatus::optimal) {
      for (int i = 0; i < m; ++i) phase_cost[i] = cost[basis[i]];
      btran(phase_cost, y);
      sol.row_duals.resize(m);
      for (int i = 0; i < m; ++i) sol.row_duals[i] = -y[i];
      sol.reduced_costs.resize(n);
      for (int j = 0; j < n; ++j) sol.reduced_costs[j] = -reduced_cost(j, y, cost[j]);
    }
    return sol;
  }
};

Simplex::Simplex(const LpModel& model, const LpOptions& options)
    : impl_(std::make_unique<Impl>(model, options)) {}
Simplex::~Simplex() = default;
Simplex::Simplex(Simplex&&) noexcept = default;
Simplex& Simplex::operator=(Simplex&&) noexcept = default;

void Simplex::set_var_bounds(int var, double lb, double ub) {
  assert(var >= 0 && var < impl_->ncols);
  impl_->lb[var] = lb;
  impl_->ub[var] = ub;
  if (impl_->basis_valid && impl_->stat[var] != VStat::basic) {
    impl_->stat[var] = impl_->bound_stat(var);
    impl_->xval[var] = impl_->bound_value(var);
  }
}

void Simplex::set_row_rhs(int row, double rhs) {
  assert(row >= 0 && row < impl_->m);
  impl_->rhs[row] = rhs;
}

void Simplex::invalidate_basis() { impl_->basis_valid = false; }

LpSolution Simplex::solve() { return impl_->solve(); }

LpSolution solve_lp(const LpModel& model, const LpOptions& options) {
  Simplex s(model, options);
  return s.solve();
}

}  // namespace hscop
