#pragma once

#include "hscop/milp.hpp"

namespace hscop {

struct OracleOptions {
  int max_bits = 16;
  double tau_strict = 1e-7;  // closed stand-in for strict inequalities
  long max_lps = 1L << 22;
};

struct OracleResult {
  bool feasible = false;
  std::vector<double> x;
  double value = -kInf;
  std::vector<int> pattern;  // indicator per term, blocks flattened in order
};

// Global optimum by exhausting indicator sign patterns and solving the linear
// program each pattern induces.  Only for tiny instances; every derived
// expected value in the test suite comes from here.
OracleResult oracle_solve(const HeavisideProblem& p, const OracleOptions& opts = {});
OracleResult oracle_solve(const EpsProblem& p, const OracleOptions& opts = {},
                          const std::optional<ProxSpec>& prox = std::nullopt);
OracleResult oracle_solve(const DecomposedProblem& dec, const OracleOptions& opts = {});

}  // namespace hscop
