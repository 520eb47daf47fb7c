#include "doctest.h"
#include "hscop/json_io.hpp"
#include "instance_gen.hpp"

using namespace hscop;

TEST_CASE("problem documents round-trip") {
  std::mt19937_64 rng(811);
  for (int trial = 0; trial < 10; ++trial) {
    HeavisideProblem p = testgen::random_problem(rng, {2, 5, 3, 2, 2.0, true});
    HeavisideProblem q = problem_from_json(problem_to_json(p));
    REQUIRE(q.dim() == p.dim());
    REQUIRE(q.constraints.size() == p.constraints.size());
    for (int i = 0; i < 50; ++i) {
      auto x = testgen::random_point(rng, p.domain);
      CHECK(q.objective_value(x) == p.objective_value(x));
      CHECK(check_feasible(q, x) == check_feasible(p, x));
    }
  }
}

TEST_CASE("problem documents carry both indicator kinds") {
  HeavisideProblem p;
  p.domain.lower = {-1.0};
  p.domain.upper = {1.0};
  p.objective.linear = AffineFn({0.5}, 0.1);
  p.objective.terms = {
      {1.0, HeavisideKind::closed_at_zero, PAFunction::affine(AffineFn({1.0}, 0.0))},
      {-2.0, HeavisideKind::open_at_zero, PAFunction::affine(AffineFn({-1.0}, 0.25))},
  };
  std::string text = problem_to_json(p);
  CHECK(text.find("\"closed\"") != std::string::npos);
  CHECK(text.find("\"open\"") != std::string::npos);
  HeavisideProblem q = problem_from_json(text);
  CHECK(q.objective.terms[1].kind == HeavisideKind::open_at_zero);
}

TEST_CASE("malformed documents are rejected with context") {
  CHECK_THROWS(problem_from_json("{\"n\": 1}"));
  CHECK_THROWS(problem_from_json("not json"));
  // wrong affine length
  std::string bad = R"({"n": 2,
    "box": {"lower": [0, 0], "upper": [1, 1], "rows": []},
    "objective": {"linear": [0, 0], "offset": 0,
      "terms": [{"psi": 1, "kind": "closed", "cvx": [[1, 0]], "cve": [[0, 0, 0]]}]},
    "constraints": []})";
  CHECK_THROWS(problem_from_json(bad));
}

TEST_CASE("approximated problems serialize with their meta block") {
  std::mt19937_64 rng(821);
  HeavisideProblem p = testgen::random_problem(rng);
  EpsProblem e = make_eps_problem(p, 0.05);
  std::string text = eps_problem_to_json(e);
  CHECK(text.find("\"eps\": 0.05") != std::string::npos);
  bool has_kind = text.find("open_at_minus_eps") != std::string::npos ||
                  text.find("\"closed\"") != std::string::npos;
  CHECK(has_kind);

  auto c = p.domain.center();
  auto sel = enumerate_selections(e, c, 0.0).first();
  DecomposedProblem dec = make_decomposed(e, sel, c, 1e-3);
  std::string dtext = decomposed_to_json(dec);
  CHECK(dtext.find("\"rho\"") != std::string::npos);
  CHECK(dtext.find("\"selection\"") != std::string::npos);
  CHECK(dtext.find("\"center\"") != std::string::npos);
}
