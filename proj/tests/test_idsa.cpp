#include "doctest.h"
#include "hscop/idsa.hpp"
#include "hscop/oracle.hpp"
#include "instance_gen.hpp"

using namespace hscop;

namespace {

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

TEST_CASE("bootstrap: unconstrained problems start at the box center") {
  HeavisideProblem p;
  p.domain.lower = {-2.0, 0.0};
  p.domain.upper = {4.0, 1.0};
  p.objective.linear = AffineFn({1.0, 1.0}, 0.0);
  auto x0 = bootstrap_feasible(p, 1e-2, 1e4);
  CHECK(x0 == std::vector<double>{1.0, 0.5});
}

TEST_CASE("bootstrap: indicator constraint lands on the feasible side") {
  HeavisideProblem p;
  p.domain.lower = {-1.0};
  p.domain.upper = {1.0};
  p.objective.linear = AffineFn({0.0}, 0.0);
  HeavisideExpr c;
  c.linear = AffineFn({0.0}, -1.0);
  c.terms = {{1.0, HeavisideKind::closed_at_zero, PAFunction::affine(AffineFn({1.0}, 0.0))}};
  p.constraints = {c};
  auto x0 = bootstrap_feasible(p, 1e-2, 1e4);
  CHECK(x0[0] >= 0.0);
  CHECK(check_feasible(p, x0));
}

TEST_CASE("bootstrap: impossible demand reports its residual") {
  HeavisideProblem p;
  p.domain.lower = {-1.0};
  p.domain.upper = {1.0};
  p.objective.linear = AffineFn({0.0}, 0.0);
  HeavisideExpr c;
  c.linear = AffineFn({0.0}, -2.0);
  c.terms = {{1.0, HeavisideKind::closed_at_zero, PAFunction::affine(AffineFn({1.0}, 0.0))}};
  p.constraints = {c};
  try {
    bootstrap_feasible(p, 1e-2, 1e4);
    FAIL("expected BootstrapInfeasible");
  } catch (const BootstrapInfeasible& e) {
    CHECK(e.residual == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("no Heaviside terms converge in one round") {
  HeavisideProblem p;
  p.domain.lower = {-1.0, -1.0};
  p.domain.upper = {1.0, 1.0};
  p.objective.linear = AffineFn({1.0, -2.0}, 0.0);
  IdsaConfig cfg;
  cfg.rho = 0.0;
  IdsaResult res = idsa_run(p, cfg);
  REQUIRE(res.trace.records.size() >= 1);
  CHECK(res.objective == doctest::Approx(3.0));
  CHECK(res.trace.records.back().step_norm <= cfg.step_tol + 1e-12);
}

TEST_CASE("two-step instance reaches the optimum from the far corner") {
  HeavisideProblem p = step_gap_instance();
  IdsaConfig cfg;
  cfg.rho = 1e-3;
  for (auto inner : {IdsaConfig::Inner::full_mip, IdsaConfig::Inner::pip}) {
    cfg.inner = inner;
    IdsaResult res = idsa_run(p, cfg, std::vector<double>{-1.0});
    CHECK(res.objective == doctest::Approx(1.0));
    // the second step stays strictly inactive at the solution
    double phi2 = res.x[0] - 0.5;
    CHECK(phi2 < 0.0);
    CHECK(res.x[0] >= 0.0);
    VerifyReport rep = verify_run(res.trace, p, cfg);
    CHECK(rep.monotone_objective);
    CHECK(rep.descent_with_prox);
    CHECK(rep.steps_converged);
    CHECK(rep.final_feasible);
    CHECK(rep.selection_singleton);
    CHECK(rep.zero_negative_set_empty);
  }
}

TEST_CASE("every accepted iterate stays feasible for the next width") {
  std::mt19937_64 rng(503);
  int runs = 0;
  for (int trial = 0; trial < 12 && runs < 8; ++trial) {
    HeavisideProblem p = testgen::random_problem(rng, {2, 5, 2, 1, 2.0, true});
    IdsaConfig cfg;
    cfg.pip.seed = 17;
    std::vector<double> x0;
    try {
      x0 = bootstrap_feasible(p, cfg.eps_schedule.front(), cfg.lambda);
    } catch (const BootstrapInfeasible&) {
      continue;
    }
    IdsaResult res = idsa_run(p, cfg, x0);
    ++runs;
    for (std::size_t i = 0; i < res.trace.records.size(); ++i) {
      double eps_next = i + 1 < res.trace.records.size()
                            ? res.trace.records[i + 1].eps
                            : res.trace.records[i].eps;
      EpsProblem next = make_eps_problem(p, eps_next);
      CHECK(next.feasible(res.trace.records[i].iterate));
    }
    // approximation objective never exceeds the trivial upper bound
    double cap = 0.0;
    for (const auto& t : p.objective.terms) cap += std::abs(t.coeff);
    for (const auto& r : res.trace.records) {
      std::vector<double> it = r.iterate;
      double cx = p.objective.linear.value(it);
      CHECK(r.theta_exit <= cx + cap + 1e-9);
      // fixing thresholds are positive whenever they are defined
      CHECK(r.delta_prime > 0.0);
    }
  }
  CHECK(runs >= 5);
}

TEST_CASE("trying every selection never loses to the single deterministic one") {
  std::mt19937_64 rng(509);
  int compared = 0;
  for (int trial = 0; trial < 12; ++trial) {
    HeavisideProblem p = testgen::random_problem(rng, {2, 4, 2, 1, 2.0, true});
    IdsaConfig cfg;
    cfg.pip.seed = 3;
    std::vector<double> x0;
    try {
      x0 = bootstrap_feasible(p, cfg.eps_schedule.front(), cfg.lambda);
    } catch (const BootstrapInfeasible&) {
      continue;
    }
    cfg.selection_mode = IdsaConfig::SelectionMode::all;
    IdsaResult all = idsa_run(p, cfg, x0);
    cfg.selection_mode = IdsaConfig::SelectionMode::single;
    IdsaResult single = idsa_run(p, cfg, x0);
    CHECK(all.objective >= single.objective - 1e-9);
    ++compared;
  }
  CHECK(compared >= 6);
}

TEST_CASE("verify flags an injected objective decrease") {
  HeavisideProblem p = step_gap_instance();
  IdsaConfig cfg;
  IdsaResult res = idsa_run(p, cfg, std::vector<double>{-1.0});
  REQUIRE(res.trace.records.size() >= 1);
  RunTrace broken = res.trace;
  RunRecord fake = broken.records.back();
  fake.nu += 1;
  fake.theta_entry -= 5.0;  // impossible drop
  broken.records.push_back(fake);
  VerifyReport rep = verify_run(broken, p, cfg);
  CHECK_FALSE(rep.monotone_objective);
  CHECK(rep.monotone_violation_at >= 0);
}

TEST_CASE("selection cap falls back to the deterministic pick") {
  // two-piece ties everywhere make the full product huge
  HeavisideProblem p;
  p.domain.lower = {-1.0};
  p.domain.upper = {1.0};
  p.objective.linear = AffineFn({0.0}, 0.0);
  PAFunction tie({AffineFn({1.0}, 0.0), AffineFn({1.0}, 0.0)},
                 {AffineFn({0.0}, 0.0), AffineFn({0.0}, 0.0)});
  for (int i = 0; i < 8; ++i)
    p.objective.terms.push_back({1.0, HeavisideKind::closed_at_zero, tie});
  IdsaConfig cfg;
  cfg.selection_cap = 16;  // 4^8 selections available
  IdsaResult res = idsa_run(p, cfg, std::vector<double>{0.5});
  REQUIRE(res.trace.records.size() >= 1);
  CHECK(res.trace.records[0].selection_fallback);
  CHECK(res.trace.records[0].selections_tried == 1);
}
