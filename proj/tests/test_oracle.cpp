#include "doctest.h"
#include "hscop/oracle.hpp"
#include "instance_gen.hpp"

using namespace hscop;

namespace {

// maximize 1_{[0,inf)}(x) - 1_{[0,inf)}(x - 0.5) over [-1, 1]:
// value 1 attained exactly on [0, 0.5)
HeavisideProblem step_gap_instance() {
  HeavisideProblem p;
  p.domain.lower = {-1.0};
  p.domain.upper = {1.0};
  p.objective.linear = AffineFn({0.0}, 0.0);
  p.objective.terms = {
      {1.0, HeavisideKind::closed_at_zero, PAFunction::affine(AffineFn({1.0}, 0.0))},
      {-1.0, HeavisideKind::closed_at_zero, PAFunction::affine(AffineFn({1.0}, -0.5))},
  };
  return p;
}

}  // namespace

TEST_CASE("no terms reduces to a plain LP") {
  HeavisideProblem p;
  p.domain.lower = {-1.0, -1.0};
  p.domain.upper = {1.0, 2.0};
  p.objective.linear = AffineFn({1.0, 2.0}, 0.25);
  OracleResult r = oracle_solve(p);
  REQUIRE(r.feasible);
  CHECK(r.value == doctest::Approx(1.0 + 4.0 + 0.25));
}

TEST_CASE("two-step instance: value one with pattern (1,0)") {
  OracleResult r = oracle_solve(step_gap_instance());
  REQUIRE(r.feasible);
  CHECK(r.value == doctest::Approx(1.0));
  REQUIRE(r.pattern.size() == 2);
  CHECK(r.pattern[0] == 1);
  CHECK(r.pattern[1] == 0);
  CHECK(r.x[0] >= -1e-9);
  CHECK(r.x[0] < 0.5);
}

TEST_CASE("oracle dominates random feasible sampling") {
  std::mt19937_64 rng(307);
  for (int trial = 0; trial < 15; ++trial) {
    HeavisideProblem p = testgen::random_problem(rng, {3, 5, 2, 1, 2.0, true});
    OracleResult r = oracle_solve(p);
    int feasible_samples = 0;
    for (int s = 0; s < 1000; ++s) {
      auto x = testgen::random_point(rng, p.domain);
      if (!check_feasible(p, x)) continue;
      ++feasible_samples;
      REQUIRE(r.feasible);
      CHECK(r.value >= p.objective_value(x) - 1e-7);
    }
    if (feasible_samples > 0) CHECK(r.feasible);
  }
}

TEST_CASE("oracle value grows as the approximation width shrinks") {
  std::mt19937_64 rng(311);
  for (int trial = 0; trial < 10; ++trial) {
    HeavisideProblem p = testgen::random_problem(rng, {2, 4, 2, 1, 2.0, true});
    double prev = -kInf;  // value at the widest eps, then tightening upward
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
      EpsProblem e = make_eps_problem(p, eps);
      OracleResult r = oracle_solve(e);
      if (!r.feasible) {
        CHECK(prev == -kInf);  // a smaller eps can only enlarge the feasible set
        continue;
      }
      CHECK(r.value >= prev - 1e-7);
      prev = r.value;
    }
  }
}

TEST_CASE("bit budget is enforced") {
  std::mt19937_64 rng(313);
  HeavisideProblem p = testgen::random_problem(rng, {2, 6, 2, 1, 2.0, true});
  OracleOptions opts;
  opts.max_bits = 2;
  std::size_t terms = p.objective.terms.size();
  for (const auto& c : p.constraints) terms += c.terms.size();
  if (terms > 2) CHECK_THROWS(oracle_solve(p, opts));
}
