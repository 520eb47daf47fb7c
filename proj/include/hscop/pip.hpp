#pragma once

#include <random>

#include "hscop/milp.hpp"

namespace hscop {

enum class QuantileSide : std::uint8_t { lower, upper };

// Nearest-rank quantile with the fixing sentinels: an empty pool returns the
// value that fixes nothing, r = 0 the value that fixes everything (the fixing
// comparisons are strict).
double quantile_threshold(std::vector<double> values, double r, QuantileSide side);

struct PartitionResult {
  IndexPartition partition;
  // smallest finite fixing threshold magnitude across blocks and sign
  // families; +inf when every pool was empty or unfixed
  double delta_min = kInf;
};

// Quantile-based fixing of the indicator terms at an incumbent.  Values at
// exactly zero join a side chosen by the seeded generator.
PartitionResult partition_from_incumbent(const EpsProblem& p, std::span<const double> x_hat,
                                         double r, std::mt19937_64& rng);

struct PipConfig {
  double r0 = 0.4;
  double r_max = 0.75;
  double r_min = 0.3;
  double r_delta = 0.1;
  int mu_max = 10;
  int mu_tilde_max = 4;
  std::uint64_t seed = 0;
  double obj_eq_tol = 1e-9;
  int prox_segments = 8;
  MilpConfig subproblem;  // proven optimality by default; time limits off
};

// What the progressive loop iterates on: an epsilon problem (surrogate or
// full), an optional proximal term with a fixed center, an optional
// constraint residual, and the big-M constant.
struct PipProblem {
  const EpsProblem* problem = nullptr;
  std::optional<ProxSpec> prox;
  double residual_lambda = 0.0;
  double big_m = 0.0;
};

struct PipIterate {
  int mu = 0;
  double r = 0.0;
  IndexPartition::Counts counts;
  double objective = -kInf;
  std::vector<double> x;
  double delta_min = kInf;
  MilpStats stats;
};

struct PipTrace {
  double objective_at_start = -kInf;
  std::vector<PipIterate> iterates;
};

struct PipResult {
  std::vector<double> x;
  double objective = -kInf;
  double gamma = 0.0;  // residual at the final iterate (residual mode only)
  PipTrace trace;
  MilpStats stats;
};

// The very first partial subproblem had no solution: the start point was not
// feasible and no residual variable was in play.
struct PipStartInfeasible : std::runtime_error {
  PipStartInfeasible()
      : std::runtime_error(
            "pip_solve: first subproblem infeasible; start from a feasible point or "
            "enable the residual-augmented variant") {}
};

// Regularized objective used for the stagnation test: counted indicator value
// plus the piecewise-linear proximal minus the residual penalty.
double pip_objective(const PipProblem& prob, std::span<const double> x);

PipResult pip_solve(const PipProblem& prob, std::span<const double> x0, const PipConfig& cfg);
PipResult pip_solve(const DecomposedProblem& dec, std::span<const double> x0,
                    const PipConfig& cfg, double big_m = 0.0, double residual_lambda = 0.0);

}  // namespace hscop
