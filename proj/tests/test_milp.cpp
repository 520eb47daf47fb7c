#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "hscop/milp.hpp"
#include "hscop/oracle.hpp"
#include "instance_gen.hpp"

using namespace hscop;

namespace {

DecomposedProblem decompose_at(const HeavisideProblem& p, double eps,
                               const std::vector<double>& center, double rho,
                               std::mt19937_64& rng) {
  EpsProblem e = make_eps_problem(p, eps);
  (void)rng;
  auto sel = enumerate_selections(e, center, 0.0).first();
  return make_decomposed(e, sel, center, rho);
}

}  // namespace

TEST_CASE("big-M from interval arithmetic") {
  HeavisideProblem p;
  p.domain.lower = {-1.0};
  p.domain.upper = {1.0};
  p.objective.linear = AffineFn({0.0}, 0.0);
  p.objective.terms = {{1.0, HeavisideKind::closed_at_zero,
                        PAFunction::affine(AffineFn({1.0}, 0.0))}};
  EpsProblem e = make_eps_problem(p, 0.01);
  CHECK(compute_big_m(e) == doctest::Approx(1.05));

  HeavisideProblem q = p;
  q.domain.lower = {0.0};
  q.objective.terms = {{1.0, HeavisideKind::closed_at_zero,
                        PAFunction::affine(AffineFn({2.0}, 3.0))}};
  CHECK(compute_big_m(make_eps_problem(q, 0.01)) == doctest::Approx(5.25));
}

TEST_CASE("big-M dominates a dense grid scan") {
  std::mt19937_64 rng(211);
  for (int trial = 0; trial < 30; ++trial) {
    HeavisideProblem p = testgen::random_problem(rng, {2, 4, 3, 1, 2.0, true});
    EpsProblem e = make_eps_problem(p, 0.01);
    double m = compute_big_m(e);
    for (int s = 0; s < 400; ++s) {
      auto x = testgen::random_point(rng, p.domain);
      for (std::size_t b = 0; b < e.num_blocks(); ++b)
        for (const auto& t : e.block(b).terms) CHECK(std::abs(t.inner.value(x)) <= m);
    }
  }
}

TEST_CASE("proximal cuts") {
  Box box;
  box.lower = {-1.0};
  box.upper = {1.0};
  std::vector<double> center{0.0};

  CHECK(encode_prox(center, 0.0, box, 8)[0].empty());

  auto single = encode_prox(center, 1.0, box, 1);
  REQUIRE(single[0].size() == 1);  // just the zero cut at the vertex
  CHECK(single[0][0].slope == 0.0);
  CHECK(single[0][0].offset == 0.0);

  // majorant property and grid gap bound for 8 cuts
  double rho = 2.0;
  ProxSpec spec{center, rho, 8};
  double worst_gap = 0.0;
  for (double t = -1.0; t <= 1.0; t += 1e-3) {
    std::vector<double> x{t};
    double pwl = prox_value(spec, box, x);
    double exact = -0.5 * rho * t * t;
    CHECK(pwl >= exact - 1e-12);
    CHECK(pwl <= 0.0 + 1e-12);
    worst_gap = std::max(worst_gap, pwl - exact);
  }
  // 7 tangents over [-1,1]: spacing 2/7, gap <= rho/2 * (h/2)^2
  double h = 2.0 / 7.0;
  CHECK(worst_gap <= 0.5 * rho * (h / 2) * (h / 2) + 1e-9);
}

TEST_CASE("all-fixed partition yields a pure LP") {
  std::mt19937_64 rng(223);
  HeavisideProblem p = testgen::random_problem(rng, {2, 4, 2, 1, 2.0, true});
  auto center = p.domain.center();
  DecomposedProblem dec = decompose_at(p, 0.05, center, 0.0, rng);
  IndexPartition part = IndexPartition::all_free(dec.surrogate);
  for (auto& block : part.state)
    for (auto& s : block) s = TermState::fixed_zero;
  MilpModel model = build_partial_ip(dec, part, compute_big_m(dec));
  CHECK(model.num_binaries() == 0);
  MilpSolution sol = solve_milp(model);
  CHECK(sol.stats.nodes <= 1);
}

TEST_CASE("inactive link row only asks for minus big-M") {
  // one free positive term with z = 0 leaves x unconstrained down to -M
  HeavisideProblem p;
  p.domain.lower = {-8.0};
  p.domain.upper = {8.0};
  p.objective.linear = AffineFn({-1.0}, 0.0);  // push x down
  p.objective.terms = {{5.0, HeavisideKind::closed_at_zero,
                        PAFunction::affine(AffineFn({1.0}, 0.0))}};
  std::vector<double> center{0.0};
  std::mt19937_64 rng(1);
  DecomposedProblem dec = decompose_at(p, 0.01, center, 0.0, rng);
  MilpModel model = build_partial_ip(dec, IndexPartition::all_free(dec.surrogate), 10.0);
  MilpSolution sol = solve_milp(model);
  REQUIRE(sol.status == MilpStatus::optimal);
  // z=1 with x=0 gives 5; z=0 with x=-8 gives 8
  CHECK(sol.objective == doctest::Approx(8.0));
  CHECK(sol.x[0] == doctest::Approx(-8.0));
}

TEST_CASE("single toggling binary picks the profitable side") {
  HeavisideProblem p;
  p.domain.lower = {-1.0};
  p.domain.upper = {1.0};
  p.objective.linear = AffineFn({0.0}, 0.0);
  p.objective.terms = {{1.0, HeavisideKind::closed_at_zero,
                        PAFunction::affine(AffineFn({1.0}, 0.0))}};
  std::mt19937_64 rng(2);
  std::vector<double> center{0.0};
  DecomposedProblem dec = decompose_at(p, 0.01, center, 0.0, rng);
  MilpModel model = build_partial_ip(dec, IndexPartition::all_free(dec.surrogate),
                                     compute_big_m(dec));
  MilpSolution sol = solve_milp(model);
  REQUIRE(sol.status == MilpStatus::optimal);
  CHECK(sol.objective == doctest::Approx(1.0));
  CHECK(sol.z(model, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("random tiny models match the sign-pattern oracle") {
  std::mt19937_64 rng(227);
  int solved = 0;
  for (int trial = 0; trial < 100; ++trial) {
    HeavisideProblem p = testgen::random_problem(rng, {2, 5, 2, 1, 2.0, true});
    auto center = p.domain.center();
    DecomposedProblem dec = decompose_at(p, 0.02, center, 0.0, rng);
    IndexPartition part = IndexPartition::all_free(dec.surrogate);
    MilpModel model = build_partial_ip(dec, part, compute_big_m(dec));
    MilpSolution sol = solve_milp(model);
    OracleResult oracle = oracle_solve(dec);
    if (!oracle.feasible) {
      CHECK(sol.status == MilpStatus::infeasible);
      continue;
    }
    REQUIRE(sol.status == MilpStatus::optimal);
    CHECK(oracle.value >= sol.objective - 1e-6 * std::max(1.0, std::abs(sol.objective)));
    CHECK(std::abs(oracle.value - sol.objective) <=
          1e-6 * std::max(1.0, std::abs(sol.objective)));
    ++solved;
  }
  CHECK(solved >= 80);
}

TEST_CASE("reported objective decodes from the binaries") {
  std::mt19937_64 rng(229);
  for (int trial = 0; trial < 40; ++trial) {
    HeavisideProblem p = testgen::random_problem(rng, {2, 5, 2, 1, 2.0, true});
    auto center = testgen::random_point(rng, p.domain);
    DecomposedProblem dec = decompose_at(p, 0.02, center, trial % 2 == 0 ? 0.0 : 1e-3, rng);
    IndexPartition part = IndexPartition::all_free(dec.surrogate);
    MilpModel model = build_partial_ip(dec, part, compute_big_m(dec));
    MilpSolution sol = solve_milp(model);
    if (sol.status != MilpStatus::optimal) continue;
    double decoded = decoded_objective(dec.surrogate, part, model, sol);
    CHECK(std::abs(decoded - sol.objective) <= 1e-6 * std::max(1.0, std::abs(sol.objective)));
    auto report = check_big_m_soundness(dec.surrogate, part, model, sol);
    CHECK(report.ok());
  }
}

TEST_CASE("partial fixings only shrink the feasible set") {
  std::mt19937_64 rng(233);
  int compared = 0;
  for (int trial = 0; trial < 40; ++trial) {
    HeavisideProblem p = testgen::random_problem(rng, {2, 5, 2, 1, 2.0, true});
    auto center = p.domain.center();
    DecomposedProblem dec = decompose_at(p, 0.02, center, 0.0, rng);
    IndexPartition full = IndexPartition::all_free(dec.surrogate);
    MilpModel full_model = build_partial_ip(dec, full, compute_big_m(dec));
    MilpSolution full_sol = solve_milp(full_model);
    if (full_sol.status != MilpStatus::optimal) continue;

    // fix every objective term to the indicator it takes at the center
    IndexPartition part = full;
    auto lifted = lift_point(dec.surrogate, full, full_model, center);
    for (std::size_t t = 0; t < part.state[0].size(); ++t) {
      int zv = full_model.z_index[0][t];
      if (zv < 0) continue;
      part.state[0][t] = lifted[static_cast<std::size_t>(zv)] > 0.5 ? TermState::fixed_one
                                                                    : TermState::fixed_zero;
    }
    MilpModel part_model = build_partial_ip(dec, part, compute_big_m(dec));
    MilpSolution part_sol = solve_milp(part_model);
    if (part_sol.status == MilpStatus::optimal) {
      CHECK(part_sol.objective <= full_sol.objective + 1e-6 * std::max(1.0, std::abs(full_sol.objective)));
      ++compared;
    }
  }
  CHECK(compared >= 10);
}

TEST_CASE("warm incumbents are accepted") {
  std::mt19937_64 rng(239);
  HeavisideProblem p = testgen::random_problem(rng, {2, 4, 2, 1, 2.0, true});
  auto center = p.domain.center();
  DecomposedProblem dec = decompose_at(p, 0.02, center, 0.0, rng);
  IndexPartition part = IndexPartition::all_free(dec.surrogate);
  MilpModel model = build_partial_ip(dec, part, compute_big_m(dec));

  // lift a feasible point of the decomposed problem
  std::vector<double> warm_x;
  for (int i = 0; i < 500; ++i) {
    auto x = testgen::random_point(rng, p.domain);
    if (dec.feasible(x)) {
      warm_x = lift_point(dec.surrogate, part, model, x);
      break;
    }
  }
  if (!warm_x.empty()) {
    MilpConfig cfg;
    cfg.warm_x = warm_x;
    MilpSolution sol = solve_milp(model, cfg);
    CHECK(sol.status == MilpStatus::optimal);
  }
}

TEST_CASE("lp format export has the standard sections") {
  HeavisideProblem p;
  p.domain.lower = {0.0};
  p.domain.upper = {1.0};
  p.objective.linear = AffineFn({1.0}, 0.0);
  p.objective.terms = {{2.0, HeavisideKind::closed_at_zero,
                        PAFunction::affine(AffineFn({1.0}, -0.5))}};
  std::mt19937_64 rng(3);
  std::vector<double> center{0.5};
  DecomposedProblem dec = decompose_at(p, 0.01, center, 0.0, rng);
  MilpModel model = build_partial_ip(dec, IndexPartition::all_free(dec.surrogate), 5.0);
  std::ostringstream os;
  write_lp_format(model, os);
  std::string text = os.str();
  CHECK(text.find("Maximize") != std::string::npos);
  CHECK(text.find("Subject To") != std::string::npos);
  CHECK(text.find("Bounds") != std::string::npos);
  CHECK(text.find("Binaries") != std::string::npos);
  CHECK(text.find("End") != std::string::npos);
  CHECK(text.find("z0_0") != std::string::npos);
}
