#pragma once

#include <functional>

#include "hscop/pip.hpp"

namespace hscop {

struct IdsaConfig {
  std::vector<double> eps_schedule = {1e-2, 1e-3, 1e-4, 1e-5};
  double rho = 1e-3;
  double delta = 1e-6;   // enlargement when collecting piece selections
  double lambda = 1e4;   // residual penalty for the feasibility bootstrap
  int nu_max = -1;       // -1: one pass over the schedule
  double step_tol = 1e-6;
  enum class SelectionMode : std::uint8_t { all, single } selection_mode = SelectionMode::all;
  std::uint64_t selection_cap = 64;  // beyond this, fall back to one selection
  enum class Inner : std::uint8_t { full_mip, pip } inner = Inner::pip;
  bool decompose = true;  // false: keep the full piecewise inners in subproblems
  PipConfig pip;
  MilpConfig subproblem;  // used by the full-MIP inner
  int prox_segments = 8;
  double big_m_floor = 0.0;
  int bootstrap_full_mip_max_terms = 24;
};

struct RunRecord {
  int nu = 0;
  double eps = 0.0;
  int selections_tried = 0;
  bool selection_fallback = false;
  double theta_entry = 0.0;  // approximation objective at the entry iterate
  double theta_exit = 0.0;   // same epsilon, at the accepted iterate
  double objective = -kInf;  // best regularized subproblem value
  std::vector<double> iterate;
  double step_norm = 0.0;
  double delta_prime = kInf;  // smallest fixing threshold at the inner termination
  MilpStats stats;
};

struct RunTrace {
  std::vector<double> start;
  std::vector<RunRecord> records;
};

struct IdsaResult {
  std::vector<double> x;
  double objective = -kInf;  // approximation objective at the final iterate
  RunTrace trace;
};

// Problems enter the loop as a family of epsilon approximations indexed by
// the shrinking width.
using EpsFamily = std::function<EpsProblem(double eps)>;

struct BootstrapInfeasible : std::runtime_error {
  double residual;
  explicit BootstrapInfeasible(double r)
      : std::runtime_error("bootstrap: no feasible point at the initial width (residual " +
                           std::to_string(r) + ")"),
        residual(r) {}
};

// Solves the residual-augmented problem at the widest epsilon; returns a
// feasible start or throws BootstrapInfeasible.  The search starts from
// `start` when given (already-feasible starts return unchanged), otherwise
// from the box center (or a vertex when the box rows exclude the center).
std::vector<double> bootstrap_feasible(const EpsFamily& family, double eps0,
                                       const IdsaConfig& cfg,
                                       std::optional<std::vector<double>> start = std::nullopt);
std::vector<double> bootstrap_feasible(const HeavisideProblem& p, double eps0, double lambda);

IdsaResult idsa_run(const EpsFamily& family, const IdsaConfig& cfg,
                    std::optional<std::vector<double>> x0 = std::nullopt);
IdsaResult idsa_run(const HeavisideProblem& p, const IdsaConfig& cfg,
                    std::optional<std::vector<double>> x0 = std::nullopt);
IdsaResult idsa_run(const ProductProblem& p, const IdsaConfig& cfg,
                    std::optional<std::vector<double>> x0 = std::nullopt);

struct VerifyReport {
  bool monotone_objective = true;  // (a) approximation objective never decreases
  int monotone_violation_at = -1;
  bool descent_with_prox = true;   // (b) improvement covers the proximal penalty
  bool steps_converged = true;     // (c) final step within tolerance
  bool final_feasible = true;      // (d) exact-indicator feasibility of the final iterate
  bool selection_singleton = true; // (e) unique active piece pair at the end
  bool zero_negative_set_empty = true;  // (e) no vanishing inner with negative weight

  bool core_passed() const {
    return monotone_objective && descent_with_prox && steps_converged && final_feasible;
  }
};

struct VerifyTolerances {
  double monotone_slack = 1e-9;
  double feas_tau = kDefaultFeasTol;
  double zero_tol = kDefaultZeroTol;
};

VerifyReport verify_run(const RunTrace& trace, const HeavisideProblem& p, const IdsaConfig& cfg,
                        const VerifyTolerances& tol = {});
VerifyReport verify_run(const RunTrace& trace, const EpsFamily& family,
                        const std::function<bool(std::span<const double>)>& original_feasible,
                        const Box& domain, const IdsaConfig& cfg, const VerifyTolerances& tol = {});

}  // namespace hscop
