#pragma once

// Seeded random instance generators shared by the unit and acceptance suites.

#include <random>

#include "hscop/model.hpp"

namespace hscop::testgen {

struct GenOptions {
  int n = 2;
  int max_terms = 6;        // across objective and constraints
  int max_pieces = 2;       // per side of each inner function
  int constraints = 1;
  double coeff_scale = 2.0;
  bool anchor_feasible = true;  // shift constraint offsets so one box point is feasible
};

inline AffineFn random_affine(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  AffineFn f;
  f.coef.resize(static_cast<std::size_t>(n));
  for (auto& c : f.coef) c = scale * u(rng);
  f.offset = 0.5 * scale * u(rng);
  return f;
}

inline PAFunction random_pa(std::mt19937_64& rng, int n, int max_pieces) {
  std::uniform_int_distribution<int> pieces(1, max_pieces);
  std::vector<AffineFn> cvx, cve;
  int nk = pieces(rng), nl = pieces(rng);
  for (int k = 0; k < nk; ++k) cvx.push_back(random_affine(rng, n, 1.0));
  for (int l = 0; l < nl; ++l) cve.push_back(random_affine(rng, n, 1.0));
  return PAFunction(std::move(cvx), std::move(cve));
}

inline std::vector<double> random_point(std::mt19937_64& rng, const Box& box) {
  std::vector<double> x(box.dim());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::uniform_real_distribution<double> u(box.lower[i], box.upper[i]);
    x[i] = u(rng);
  }
  return x;
}

inline HeavisideProblem random_problem(std::mt19937_64& rng, const GenOptions& opt = {}) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> mag(0.3, opt.coeff_scale);

  HeavisideProblem p;
  p.domain.lower.assign(static_cast<std::size_t>(opt.n), 0.0);
  p.domain.upper.assign(static_cast<std::size_t>(opt.n), 0.0);
  for (int i = 0; i < opt.n; ++i) {
    double c = 0.5 * u(rng);
    p.domain.lower[static_cast<std::size_t>(i)] = c - 1.0 - 0.5 * std::abs(u(rng));
    p.domain.upper[static_cast<std::size_t>(i)] = c + 1.0 + 0.5 * std::abs(u(rng));
  }

  std::uniform_int_distribution<int> term_count(1, opt.max_terms);
  int total_terms = term_count(rng);
  int obj_terms = std::max(1, total_terms - opt.constraints);
  int left = total_terms - obj_terms;

  auto make_term = [&]() {
    HeavisideTerm t;
    t.coeff = (u(rng) < 0 ? -1.0 : 1.0) * mag(rng);
    t.kind = HeavisideKind::closed_at_zero;
    t.inner = random_pa(rng, opt.n, opt.max_pieces);
    return t;
  };

  p.objective.linear = random_affine(rng, opt.n, 0.5);
  for (int j = 0; j < obj_terms; ++j) p.objective.terms.push_back(make_term());

  std::vector<double> anchor = random_point(rng, p.domain);
  for (int i = 0; i < opt.constraints; ++i) {
    HeavisideExpr c;
    c.linear = random_affine(rng, opt.n, 0.5);
    int k = left > 0 ? 1 : 0;
    left -= k;
    for (int j = 0; j < k; ++j) c.terms.push_back(make_term());
    if (opt.anchor_feasible) {
      double v = c.value(anchor);
      if (v < 0.1) c.linear.offset += 0.1 - v;
    }
    p.constraints.push_back(std::move(c));
  }
  return p;
}

}  // namespace hscop::testgen
