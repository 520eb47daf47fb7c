#include "doctest.h"
#include "hscop/oracle.hpp"
#include "hscop/pip.hpp"
#include "instance_gen.hpp"

using namespace hscop;

namespace {

DecomposedProblem decompose_at_center(const HeavisideProblem& p, double eps, double rho) {
  EpsProblem e = make_eps_problem(p, eps);
  auto c = p.domain.center();
  auto sel = enumerate_selections(e, c, 0.0).first();
  return make_decomposed(e, sel, c, rho);
}

std::vector<double> feasible_start(const DecomposedProblem& dec, std::mt19937_64& rng) {
  auto c = dec.surrogate.domain.center();
  if (dec.feasible(c)) return c;
  for (int i = 0; i < 2000; ++i) {
    auto x = testgen::random_point(rng, dec.surrogate.domain);
    if (dec.feasible(x)) return x;
  }
  return {};
}

}  // namespace

TEST_CASE("nearest-rank quantiles") {
  std::vector<double> pool{0.1, 0.5, 2.0, 3.0};
  CHECK(quantile_threshold(pool, 0.5, QuantileSide::lower) == 0.5);
  CHECK(quantile_threshold({}, 0.5, QuantileSide::lower) == kInf);
  CHECK(quantile_threshold({}, 0.5, QuantileSide::upper) == -kInf);
  CHECK(quantile_threshold(pool, 0.0, QuantileSide::lower) == -kInf);
  CHECK(quantile_threshold(pool, 1.0, QuantileSide::lower) == 3.0);
  CHECK(quantile_threshold(pool, 0.5, QuantileSide::upper) == 2.0);
  CHECK(quantile_threshold(pool, 0.25, QuantileSide::lower) == 0.1);
  CHECK_THROWS(quantile_threshold(pool, -0.1, QuantileSide::lower));
  CHECK_THROWS(quantile_threshold(pool, 1.1, QuantileSide::lower));
}

TEST_CASE("r = 1 fixes nothing because comparisons are strict") {
  std::mt19937_64 rng(401);
  HeavisideProblem p = testgen::random_problem(rng, {2, 5, 2, 1, 2.0, true});
  DecomposedProblem dec = decompose_at_center(p, 0.05, 0.0);
  auto x = testgen::random_point(rng, p.domain);
  auto pr = partition_from_incumbent(dec.surrogate, x, 1.0, rng);
  auto c = pr.partition.counts();
  CHECK(c.fixed_one == 0);
  CHECK(c.fixed_zero == 0);
}

TEST_CASE("equal positive values never fix") {
  // every term shares the linked value, so the quantile equals it and the
  // strict comparison keeps everything free
  HeavisideProblem p;
  p.domain.lower = {-1.0};
  p.domain.upper = {1.0};
  p.objective.linear = AffineFn({0.0}, 0.0);
  for (int i = 0; i < 4; ++i)
    p.objective.terms.push_back(
        {1.0, HeavisideKind::closed_at_zero, PAFunction::affine(AffineFn({1.0}, 0.3))});
  DecomposedProblem dec = decompose_at_center(p, 0.05, 0.0);
  std::mt19937_64 rng(1);
  std::vector<double> x{0.0};
  auto pr = partition_from_incumbent(dec.surrogate, x, 0.5, rng);
  CHECK(pr.partition.counts().free == 4);
}

TEST_CASE("fixed-to-one terms satisfy their hard rows at the incumbent") {
  std::mt19937_64 rng(409);
  for (int trial = 0; trial < 30; ++trial) {
    HeavisideProblem p = testgen::random_problem(rng, {2, 6, 2, 1, 2.0, true});
    DecomposedProblem dec = decompose_at_center(p, 0.05, 0.0);
    auto x = testgen::random_point(rng, p.domain);
    auto pr = partition_from_incumbent(dec.surrogate, x, 0.4, rng);
    std::size_t seen = 0;
    for (std::size_t b = 0; b < dec.surrogate.num_blocks(); ++b) {
      const auto& terms = dec.surrogate.block(b).terms;
      REQUIRE(pr.partition.state[b].size() == terms.size());
      for (std::size_t t = 0; t < terms.size(); ++t) {
        ++seen;
        double inner = terms[t].inner.value(x);
        double linked = terms[t].coeff > 0 ? inner : -inner - dec.eps();
        if (pr.partition.at(b, t) == TermState::fixed_one) CHECK(linked > 0.0);
      }
    }
    CHECK(seen == dec.surrogate.total_terms());
  }
}

TEST_CASE("progressive loop: no terms means one subproblem") {
  HeavisideProblem p;
  p.domain.lower = {-1.0, -1.0};
  p.domain.upper = {1.0, 1.0};
  p.objective.linear = AffineFn({1.0, 0.5}, 0.0);
  DecomposedProblem dec = decompose_at_center(p, 0.05, 0.0);
  PipConfig cfg;
  std::vector<double> x0{0.0, 0.0};
  PipResult res = pip_solve(dec, x0, cfg);
  CHECK(res.objective == doctest::Approx(1.5));
  // objective stalls immediately after the first optimal subproblem
  CHECK(res.trace.iterates.size() <= static_cast<std::size_t>(cfg.mu_tilde_max + 1));
}

TEST_CASE("progressive loop terminates once the objective stalls at the optimum") {
  std::mt19937_64 rng(419);
  HeavisideProblem p = testgen::random_problem(rng, {2, 4, 2, 1, 2.0, true});
  DecomposedProblem dec = decompose_at_center(p, 0.05, 0.0);
  OracleResult oracle = oracle_solve(dec);
  if (!oracle.feasible) return;
  PipConfig cfg;
  PipResult res = pip_solve(dec, oracle.x, cfg);
  CHECK(res.objective >= oracle.value - 1e-6);
  CHECK(res.objective <= oracle.value + 1e-6);
  int mu_tilde_run = 0;
  double prev = res.trace.objective_at_start;
  for (const auto& it : res.trace.iterates) {
    if (std::abs(it.objective - prev) <= cfg.obj_eq_tol) ++mu_tilde_run;
    prev = it.objective;
  }
  CHECK(mu_tilde_run >= cfg.mu_tilde_max);
}

TEST_CASE("progressive loop is monotone, finite, and sandwiched") {
  std::mt19937_64 rng(421);
  int compared = 0;
  for (int trial = 0; trial < 50; ++trial) {
    HeavisideProblem p = testgen::random_problem(rng, {2, 6, 2, 1, 2.0, true});
    DecomposedProblem dec = decompose_at_center(p, 0.05, 0.0);
    auto x0 = feasible_start(dec, rng);
    if (x0.empty()) continue;
    PipConfig cfg;
    cfg.seed = 1000 + static_cast<std::uint64_t>(trial);
    PipResult res = pip_solve(dec, x0, cfg);
    CHECK(res.trace.iterates.size() <= static_cast<std::size_t>(cfg.mu_max));
    double prev = res.trace.objective_at_start;
    for (const auto& it : res.trace.iterates) {
      CHECK(it.objective >= prev - 1e-9);
      prev = it.objective;
    }
    OracleResult oracle = oracle_solve(dec);
    REQUIRE(oracle.feasible);
    CHECK(res.objective >= res.trace.objective_at_start - 1e-9);
    CHECK(res.objective <= oracle.value + 1e-6 * std::max(1.0, std::abs(oracle.value)));
    ++compared;
  }
  CHECK(compared >= 25);
}

TEST_CASE("identical seeds reproduce the trace") {
  std::mt19937_64 rng(431);
  HeavisideProblem p = testgen::random_problem(rng, {2, 6, 2, 1, 2.0, true});
  DecomposedProblem dec = decompose_at_center(p, 0.05, 1e-3);
  auto x0 = feasible_start(dec, rng);
  if (x0.empty()) return;
  PipConfig cfg;
  cfg.seed = 77;
  PipResult a = pip_solve(dec, x0, cfg);
  PipResult b = pip_solve(dec, x0, cfg);
  REQUIRE(a.trace.iterates.size() == b.trace.iterates.size());
  for (std::size_t i = 0; i < a.trace.iterates.size(); ++i) {
    CHECK(a.trace.iterates[i].objective == b.trace.iterates[i].objective);
    CHECK(a.trace.iterates[i].x == b.trace.iterates[i].x);
    CHECK(a.trace.iterates[i].r == b.trace.iterates[i].r);
  }
}

TEST_CASE("infeasible start without residual reports the bad start") {
  HeavisideProblem p;
  p.domain.lower = {-1.0};
  p.domain.upper = {1.0};
  p.objective.linear = AffineFn({0.0}, 0.0);
  HeavisideExpr c;  // demands 2 from a single unit term: impossible
  c.linear = AffineFn({0.0}, -2.0);
  c.terms = {{1.0, HeavisideKind::closed_at_zero, PAFunction::affine(AffineFn({1.0}, 0.0))}};
  p.constraints = {c};
  DecomposedProblem dec = decompose_at_center(p, 0.05, 0.0);
  PipConfig cfg;
  std::vector<double> x0{0.5};
  CHECK_THROWS_AS(pip_solve(dec, x0, cfg), PipStartInfeasible);

  // the residual-augmented variant is always feasible and reports the gap
  PipResult res = pip_solve(dec, x0, cfg, 0.0, /*residual_lambda=*/1e4);
  CHECK(res.gamma == doctest::Approx(1.0).epsilon(1e-6));
}
