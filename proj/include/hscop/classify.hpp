#pragma once

#include <map>

#include "hscop/dataio.hpp"
#include "hscop/idsa.hpp"

namespace hscop {

// ----- score-based multiclass classifier ------------------------------------

struct ScoreModel {
  std::vector<std::vector<double>> W;  // per class: p weights
  std::vector<double> b;

  // highest score wins; ties resolve to the smallest class id
  int predict(std::span<const double> x) const;
};

struct Metrics {
  double accuracy = 0.0;
  std::vector<std::optional<double>> precision;  // empty denominator -> undefined
  std::vector<double> recall;
};

Metrics compute_metrics(const std::vector<int>& predictions, const std::vector<int>& labels,
                        int num_classes);
std::vector<int> predict_all(const ScoreModel& m, const Dataset& d);

struct ScoreProblemOptions {
  std::map<int, double> precision_floors;  // class -> beta in (0,1)
  std::map<int, double> recall_floors;     // class -> alpha; filled at 0.1 by default
  bool default_recall_floors = true;       // mirror the precision classes at 0.1
  double tau = 10.0;
  double margin = 1.0;
};

// The flattened decision vector is [w_0 .. w_{J-1}, b, w+ splits, w- splits];
// the splits realize the l1 budget per class inside the box rows.
struct ScoreProblemSpec {
  ProductProblem problem;
  int p = 0;
  int J = 0;
  ScoreProblemOptions opts;
  double big_m_floor = 0.0;  // data-driven floor taken together with intervals

  int model_vars() const { return (p + 1) * J; }
  ScoreModel decode(std::span<const double> x) const;
};

ScoreProblemSpec build_score_problem(const Dataset& d, const ScoreProblemOptions& opts);

// Nearest-mean linear classifier scaled into the l1 budget; the cheap warm
// start for the score pipelines.
ScoreModel nearest_mean_model(const Dataset& d, double tau);
std::vector<double> flatten_score_model(const ScoreProblemSpec& spec, const ScoreModel& m);

enum class SolveMethod : std::uint8_t { full_mip, pip, isa_pip, idsa_pip, oracle };

struct ScoreSolveConfig {
  SolveMethod method = SolveMethod::idsa_pip;
  IdsaConfig idsa;
  double fixed_eps = 1e-5;  // width for the fixed-eps baselines
  MilpConfig full_mip;      // budget of the one-shot baseline
  int oracle_bits = 16;
  std::uint64_t seed = 0;
};

struct ScoreOutcome {
  bool feasible = false;
  std::vector<double> x;
  ScoreModel model;
  double objective = -kInf;  // exact objective of the original problem
  double wall_ms = 0.0;
  RunTrace trace;  // populated by the shrinking-loop methods
  MilpStats stats;
};

ScoreOutcome solve_score_problem(const ScoreProblemSpec& spec, const Dataset& d,
                                 const ScoreSolveConfig& cfg);

// ----- tree classifier -------------------------------------------------------

struct TreeModel {
  int depth = 0;
  std::vector<std::vector<double>> a;  // per branch node, heap order
  std::vector<double> b;
  std::vector<int> leaf_label;

  int num_branch() const { return (1 << depth) - 1; }
  int num_leaves() const { return 1 << depth; }
  // route by sign: a_k . x - b_k >= 0 goes right
  int route_leaf(std::span<const double> x) const;
  int predict(std::span<const double> x) const;
};

struct TreeProblemOptions {
  int depth = 2;
  double tau1 = 100.0;
  int tau0 = -1;                           // -1: ceil(p/2) when p > 5, else off
  std::map<int, double> precision_floors;  // class -> beta
  double eps = 1e-2;
  double rho = 0.0;  // proximal weight on (a, b) for decomposed subproblems
  int prox_segments = 8;
};

// Layout and row bookkeeping for the tree integer program.
struct TreeIpSpec {
  MilpModel model;
  TreeProblemOptions opts;
  int N = 0, p = 0, J = 0;
  int var_a0 = 0;        // a_{k,f} at var_a0 + k*p + f
  int var_b0 = 0;        // b_k
  int var_xi0 = -1;      // xi_{s,t} at var_xi0 + s*T + t  (-1 when fixed away)
  int var_c0 = -1;       // c_{j,t}
  int var_zp0 = -1, var_zm0 = -1;
  std::vector<int> xi_var, zp_var, zm_var;  // per (s,t), -1 when fixed
  std::vector<std::int8_t> xi_fix, zp_fix, zm_fix;  // -1 free, else fixed value
  std::vector<int> c_var;                   // per (j,t)

  TreeModel decode(std::span<const double> x) const;
};

// Full integer program with one-hot piece pickers on the exclusion rows.
// When `selection` is given (one picked path piece per sample-leaf pair) the
// exclusion rows use only that piece and no pickers appear.
TreeIpSpec build_tree_problem(const Dataset& d, const TreeProblemOptions& opts,
                              const std::vector<int>* selection = nullptr,
                              const std::vector<std::int8_t>* xi_fix = nullptr,
                              const std::vector<std::int8_t>* zp_fix = nullptr,
                              const std::vector<std::int8_t>* zm_fix = nullptr,
                              const std::vector<double>* prox_center = nullptr);

// Greedy axis-aligned splits scaled into the l1 budget; the standard warm start.
TreeModel greedy_tree(const Dataset& d, int depth, double tau1, std::uint64_t seed);

// Margin-routing value of sample s toward leaf t (the smallest slack along
// the path); offset = 1 gives the objective's margin semantics, 0 and eps the
// counting semantics.
double tree_route_value(const TreeModel& m, std::span<const double> x, int leaf,
                        double margin, double eps_left);

std::vector<double> flatten_tree(const TreeModel& m);  // into [a | b] layout

// Lifts a tree model to a full assignment of the IP's variables (bits from
// exact routing, helper columns from their definitions).
std::vector<double> lift_tree_point(const TreeIpSpec& spec, const Dataset& d,
                                    const TreeModel& tree);

struct TreeSolveResult {
  bool feasible = false;
  TreeModel tree;
  std::vector<double> x;  // full model vector of the final partial IP
  TreeIpSpec spec;        // the final model (for bit inspection)
  double objective = -kInf;
  MilpStats stats;
  std::vector<double> objective_trace;  // per inner iteration
};

struct TreePipConfig {
  PipConfig pip;
  std::vector<double> eps_schedule = {1e-1, 1e-2, 1e-3, 1e-4};
  int nu_max = -1;
  double step_tol = 1e-6;
};

// Full MIP baseline on the tree program.
TreeSolveResult solve_tree_full_mip(const Dataset& d, const TreeProblemOptions& opts,
                                    const MilpConfig& cfg, std::uint64_t seed);

// Outer shrinking loop with piece selection at the incumbent and the
// progressive fixing of the routing/counting binaries inside.
TreeSolveResult solve_tree_idsa_pip(const Dataset& d, const TreeProblemOptions& opts,
                                    const TreePipConfig& cfg, std::uint64_t seed);

// Recomputes every routing/counting bit of `spec` from the decoded tree and
// checks the full row set; returns false on any inconsistency.
bool tree_bits_consistent(const TreeIpSpec& spec, const Dataset& d,
                          std::span<const double> full_x);

// ----- pareto sweep ----------------------------------------------------------

struct ParetoPoint {
  double beta = 0.0;
  bool feasible = false;
  double objective = -kInf;
  double wall_ms = 0.0;
  Metrics train;
  Metrics test;
  std::optional<double> train_precision;  // of the swept class
  std::optional<double> test_precision;
};

using ParetoSolver = std::function<ParetoPoint(double beta)>;

struct ParetoResult {
  std::vector<ParetoPoint> points;
  std::vector<int> train_front;  // indices of non-dominated points
  std::vector<int> test_front;
};

ParetoResult pareto_sweep(const std::vector<double>& betas, const ParetoSolver& solve);

}  // namespace hscop
