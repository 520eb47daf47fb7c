#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "hscop/lp.hpp"
#include "hscop/reformulate.hpp"

namespace hscop {

enum class TermState : std::uint8_t { free_binary, fixed_one, fixed_zero };

// Per-(block, term) fixing decisions.  Binary semantics follow the closed
// rewrite: for positive terms z = 1 means the indicator holds; for negative
// terms z = 1 means the inner value is pushed below -eps, i.e. the original
// indicator is 1 - z.
struct IndexPartition {
  std::vector<std::vector<TermState>> state;

  static IndexPartition all_free(const EpsProblem& p);

  TermState at(std::size_t block, std::size_t term) const { return state[block][term]; }

  struct Counts {
    std::size_t free = 0, fixed_one = 0, fixed_zero = 0;
  };
  Counts counts() const;
};

struct ProxSpec {
  std::vector<double> center;
  double rho = 0.0;
  int segments = 8;
};

struct MilpModel {
  LpModel lp;
  std::vector<std::uint8_t> is_binary;
  std::vector<std::string> var_names;
  int num_structural = 0;
  int residual_var = -1;  // constraint slack variable, -1 when absent
  double big_m = 0.0;
  double eps = 0.0;

  // indicator binary per (block, term); -1 for fixed terms
  std::vector<std::vector<int>> z_index;

  // Rows that realize an indicator get nudged inward by the polish step so
  // the strict sign semantics survive floating-point vertices.
  struct RowPolish {
    std::int8_t mode = 0;  // 0 none, 1 always, 2 when controlling binary is 1
    int link_var = -1;
    double dir = 0.0;  // +1 tightens a >= row, -1 a <= row
  };
  std::vector<RowPolish> row_polish;

  // Non-structural helper columns, recorded so a bare point x can be lifted
  // to a full feasible variable vector.
  struct AuxInfo {
    char role = 0;  // 'u' min epigraph, 'v' max hypograph, 'k'/'l' piece pick, 'q' prox
    int var = -1;
    int block = 0;
    int term = 0;   // coordinate for 'q'
    int piece = 0;  // for 'k'/'l'
  };
  std::vector<AuxInfo> aux;

  std::optional<ProxSpec> prox;

  int num_binaries() const {
    int c = 0;
    for (auto b : is_binary) c += b != 0;
    return c;
  }
};

struct MilpBuildOptions {
  double residual_lambda = 0.0;  // > 0 adds the nonnegative constraint slack
  bool include_prox = true;      // decomposed builds take center/rho from the problem
  int prox_segments = 8;
};

// Interval-arithmetic bound on |inner| over the box, inflated by 5%.
double compute_big_m(const EpsProblem& p);
double compute_big_m(const DecomposedProblem& dec);

// Piecewise-linear concave majorant of -(rho/2)(x_c - center_c)^2 per
// coordinate, built from tangent cuts plus the exact zero cut at the center.
struct ProxCut {
  double slope = 0.0;   // coefficient on x_c
  double offset = 0.0;  // cut: q_c <= slope * x_c + offset
};
std::vector<std::vector<ProxCut>> encode_prox(std::span<const double> center, double rho,
                                              const Box& box, int segments);
double prox_value(const ProxSpec& spec, const Box& box, std::span<const double> x);

// IP of a decomposed problem under a partition.  All indicator rows are
// linear because positive terms carry a single max piece and negative terms a
// single min piece.
MilpModel build_partial_ip(const DecomposedProblem& dec, const IndexPartition& part, double big_m,
                           const MilpBuildOptions& opts = {});

// IP of an epsilon problem with the full piecewise inners.  Indicator rows on
// the disjunctive side (lower bounds on a max, upper bounds on a min) get
// one-hot piece-selection binaries.
MilpModel build_direct_ip(const EpsProblem& p, const IndexPartition& part, double big_m,
                          const std::optional<ProxSpec>& prox = std::nullopt,
                          const MilpBuildOptions& opts = {});

enum class MilpStatus : std::uint8_t { optimal, infeasible, gap_limit, node_limit, time_limit };

struct MilpStats {
  long nodes = 0;
  long lp_iterations = 0;
  double wall_ms = 0.0;
};

struct MilpSolution {
  MilpStatus status = MilpStatus::infeasible;
  std::vector<double> x;  // all model variables
  double objective = -kInf;
  double best_bound = kInf;
  MilpStats stats;

  bool has_solution() const { return !x.empty(); }
  double z(const MilpModel& model, std::size_t block, std::size_t term) const {
    int v = model.z_index[block][term];
    return v < 0 ? 0.0 : x[static_cast<std::size_t>(v)];
  }
};

struct MilpConfig {
  double gap_tol = 1e-6;
  double int_tol = 1e-6;
  // When > 0, every feasible objective is promised to be a multiple of this
  // value; node bounds round down to the grid before the gap test.
  double objective_grid = 0.0;
  // Optional coarser stop: proving this gap ends the search with gap_limit.
  double stop_gap = kInf;
  long node_limit = 500000;
  double time_limit_s = kInf;
  double stall_time_s = kInf;  // stop after this long without incumbent progress
  std::optional<std::vector<double>> warm_x;  // full variable vector
  bool polish = true;
  double polish_margin = 1e-7;
};

// Best-first branch and bound over the binaries with most-fractional
// branching; deterministic for a fixed model and config.
MilpSolution solve_milp(const MilpModel& model, const MilpConfig& cfg = {});

// Completes a structural point to a full model-variable vector (binaries from
// exact indicator evaluation, helper columns from their definitions).  Used
// to hand incumbents to solve_milp.
std::vector<double> lift_point(const EpsProblem& p, const IndexPartition& part,
                               const MilpModel& model, std::span<const double> x);

// Indicator value of a term under the closed rewrite given binary values.
double decoded_indicator(const EpsTerm& term, TermState st, double zval);

// Objective of the source problem reconstructed from a solution's binaries
// plus the piecewise-linear proximal value; matches MilpSolution::objective
// up to LP tolerances for consistent models.
double decoded_objective(const EpsProblem& p, const IndexPartition& part, const MilpModel& model,
                         const MilpSolution& sol);

struct SoundnessIssue {
  int block = 0;
  int term = 0;
  double linked_value = 0.0;
  bool profitable_flip = false;  // objective term stuck at z=0 with its row satisfied
  bool below_big_m = false;      // linked value beneath -M: the constant is undersized
};

struct SoundnessReport {
  std::vector<SoundnessIssue> issues;
  bool ok() const { return issues.empty(); }
};

SoundnessReport check_big_m_soundness(const EpsProblem& p, const IndexPartition& part,
                                      const MilpModel& model, const MilpSolution& sol);

// Verifies bounds, rows, and binary integrality of a full variable vector.
bool milp_point_feasible(const MilpModel& model, std::span<const double> x, double tol = 1e-6);

void write_lp_format(const MilpModel& model, std::ostream& os);

}  // namespace hscop
