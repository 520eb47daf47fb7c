#include "doctest.h"
#include "lp_oracle.hpp"

using namespace hscop;
using namespace hscop::lporacle;


TEST_CASE("simple bounded maximization") {
  LpModel lp;
  lp.add_var(0.0, 2.0, 1.0);
  lp.add_row({{0, 1.0}}, RowSense::le, 1.0);
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::optimal);
  CHECK(sol.x[0] == doctest::Approx(1.0));
  CHECK(sol.objective == doctest::Approx(1.0));
}

TEST_CASE("infeasible pair of rows") {
  LpModel lp;
  lp.add_var(-5.0, 5.0, 1.0);
  lp.add_row({{0, 1.0}}, RowSense::ge, 1.0);
  lp.add_row({{0, 1.0}}, RowSense::le, 0.0);
  CHECK(solve_lp(lp).status == LpStatus::infeasible);
}

TEST_CASE("equality rows and negative costs") {
  LpModel lp;
  lp.add_var(-1.0, 1.0, -1.0);
  lp.add_var(-1.0, 1.0, 2.0);
  lp.add_row({{0, 1.0}, {1, 1.0}}, RowSense::eq, 0.5);
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::optimal);
  CHECK(sol.x[0] + sol.x[1] == doctest::Approx(0.5));
  CHECK(sol.objective == doctest::Approx(-(-0.5) + 2.0 * 1.0).epsilon(1e-6));
}

TEST_CASE("degenerate ties do not cycle") {
  LpModel lp;
  for (int j = 0; j < 4; ++j) lp.add_var(0.0, 1.0, 1.0);
  for (int i = 0; i < 4; ++i) {
    std::vector<std::pair<int, double>> coef;
    for (int j = 0; j < 4; ++j) coef.emplace_back(j, 1.0);
    lp.add_row(std::move(coef), RowSense::le, 1.0);
  }
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::optimal);
  CHECK(sol.objective == doctest::Approx(1.0));
}

TEST_CASE("random dense LPs match the vertex enumeration") {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> nn(1, 5), rr(1, 6);
  int solved = 0, infeasible = 0;
  for (int trial = 0; trial < 250; ++trial) {
    LpModel lp = random_lp(rng, nn(rng), rr(rng));
    VertexOracle oracle(lp);
    double expect = oracle.best_value();
    LpSolution sol = solve_lp(lp);
    if (expect == -kInf) {
      CHECK(sol.status == LpStatus::infeasible);
      ++infeasible;
    } else {
      REQUIRE(sol.status == LpStatus::optimal);
      CHECK(sol.objective == doctest::Approx(expect).epsilon(1e-6));
      ++solved;
    }
  }
  CHECK(solved >= 150);
  CHECK(infeasible >= 5);
}

TEST_CASE("strong duality holds at every optimum") {
  std::mt19937_64 rng(103);
  std::uniform_int_distribution<int> nn(1, 6), rr(1, 7);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    LpModel lp = random_lp(rng, nn(rng), rr(rng));
    LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal) continue;
    double dual = dual_objective(lp, sol);
    CHECK(std::abs(sol.objective - dual) <= 1e-6 * std::max(1.0, std::abs(sol.objective)));
    // dual sign conditions
    for (std::size_t i = 0; i < lp.rows.size(); ++i) {
      if (lp.rows[i].sense == RowSense::le) CHECK(sol.row_duals[i] >= -1e-6);
      if (lp.rows[i].sense == RowSense::ge) CHECK(sol.row_duals[i] <= 1e-6);
    }
    ++checked;
  }
  CHECK(checked >= 120);
}

TEST_CASE("warm restart after bound changes") {
  LpModel lp;
  lp.add_var(0.0, 1.0, 1.0);
  lp.add_var(0.0, 1.0, 1.0);
  lp.add_row({{0, 1.0}, {1, 1.0}}, RowSense::le, 1.5);
  Simplex splx(lp);
  LpSolution first = splx.solve();
  REQUIRE(first.status == LpStatus::optimal);
  CHECK(first.objective == doctest::Approx(1.5));
  splx.set_var_bounds(0, 0.0, 0.0);
  LpSolution second = splx.solve();
  REQUIRE(second.status == LpStatus::optimal);
  CHECK(second.objective == doctest::Approx(1.0));
  splx.set_var_bounds(0, 1.0, 1.0);
  LpSolution third = splx.solve();
  REQUIRE(third.status == LpStatus::optimal);
  CHECK(third.x[1] == doctest::Approx(0.5));
}
