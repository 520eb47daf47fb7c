#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "hscop/model.hpp"

namespace hscop {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LpRow {
  std::vector<std::pair<int, double>> coef;  // sparse (var, value)
  RowSense sense = RowSense::le;
  double rhs = 0.0;
};

// Maximization model with bounded variables.
struct LpModel {
  std::vector<double> lower, upper, obj;
  double obj_offset = 0.0;
  std::vector<LpRow> rows;

  int num_vars() const { return static_cast<int>(lower.size()); }

  int add_var(double lb, double ub, double c) {
    lower.push_back(lb);
    upper.push_back(ub);
    obj.push_back(c);
    return num_vars() - 1;
  }

  void add_row(std::vector<std::pair<int, double>> coef, RowSense sense, double rhs) {
    rows.push_back({std::move(coef), sense, rhs});
  }
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpSolution {
  LpStatus status = LpStatus::iteration_limit;
  std::vector<double> x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  long iterations = 0;
  std::vector<double> row_duals;      // maximization sense
  std::vector<double> reduced_costs;  // structural columns, maximization sense
};

struct LpOptions {
  double feas_tol = 1e-7;
  double opt_tol = 1e-7;
  double pivot_tol = 1e-9;
  long max_iterations = 0;  // 0: scale with model size
  int refactor_every = 64;
  int stall_before_bland = 300;
};

// Primal simplex over bounded variables with a composite (infeasibility
// minimizing) phase one.  The instance owns a mutable copy of the model so
// branch-and-bound can tighten bounds / shift right-hand sides and re-solve
// from the previous basis.
class Simplex {
 public:
  explicit Simplex(const LpModel& model, const LpOptions& options = {});
  ~Simplex();
  Simplex(Simplex&&) noexcept;
  Simplex& operator=(Simplex&&) noexcept;

  void set_var_bounds(int var, double lb, double ub);
  void set_row_rhs(int row, double rhs);
  void invalidate_basis();  // next solve restarts from the slack basis

  LpSolution solve();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

LpSolution solve_lp(const LpModel& model, const LpOptions& options = {});

}  // namespace hscop
