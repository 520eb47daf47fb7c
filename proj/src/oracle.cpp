#include "hscop/oracle.hpp"

#include <cmath>

namespace hscop {

namespace {

// A term flattened for enumeration: thresholds for asserting the indicator
// on (inner >= on_rhs) or off (inner <= off_rhs).
struct FlatTerm {
  int block = 0;
  double coeff = 0.0;
  const PAFunction* inner = nullptr;
  double on_rhs = 0.0;
  double off_rhs = 0.0;
};

struct Enumerator {
  const Box* box = nullptr;
  const AffineFn* obj_linear = nullptr;
  std::vector<const AffineFn*> con_linear;
  std::vector<FlatTerm> terms;
  const OracleOptions* opts = nullptr;
  std::optional<ProxSpec> prox;

  OracleResult run() {
    if (static_cast<int>(terms.size()) > opts->max_bits)
      throw std::invalid_argument("oracle: term count exceeds the bit budget");

    // Per-term alternatives: indicator on with one max piece pinned, or
    // indicator off with one min piece pinned.  The pinned piece makes the
    // disjunctive side of the piecewise bound linear.
    struct Alt {
      bool on;
      int piece;
    };
    std::vector<std::vector<Alt>> alts(terms.size());
    double total = 1;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      for (std::size_t k = 0; k < terms[t].inner->cvx.size(); ++k)
        alts[t].push_back({true, static_cast<int>(k)});
      for (std::size_t l = 0; l < terms[t].inner->cve.size(); ++l)
        alts[t].push_back({false, static_cast<int>(l)});
      total *= static_cast<double>(alts[t].size());
      if (total > static_cast<double>(opts->max_lps))
        throw std::invalid_argument("oracle: piece enumeration exceeds the LP budget");
    }

    OracleResult best;
    std::vector<std::size_t> pos(terms.size(), 0);
    std::size_t n = box->dim();
    while (true) {
      LpModel lp;
      for (std::size_t j = 0; j < n; ++j) lp.add_var(box->lower[j], box->upper[j], 0.0);
      for (const auto& r : box->rows) {
        std::vector<std::pair<int, double>> coef;
        for (std::size_t j = 0; j < r.coef.size(); ++j)
          if (r.coef[j] != 0.0) coef.emplace_back(static_cast<int>(j), r.coef[j]);
        lp.add_row(std::move(coef), r.sense, r.rhs);
      }
      for (std::size_t j = 0; j < n; ++j) lp.obj[j] = obj_linear->coef[j];
      lp.obj_offset = obj_linear->offset;

      std::vector<double> con_shift(con_linear.size(), 0.0);
      std::vector<int> pattern(terms.size(), 0);
      for (std::size_t t = 0; t < terms.size(); ++t) {
        const FlatTerm& ft = terms[t];
        const Alt& a = alts[t][pos[t]];
        pattern[t] = a.on ? 1 : 0;
        if (a.on) {
          // pinned max piece + every min piece >= on_rhs
          const AffineFn& pk = ft.inner->cvx[static_cast<std::size_t>(a.piece)];
          for (const auto& pl : ft.inner->cve) {
            std::vector<std::pair<int, double>> coef;
            for (std::size_t j = 0; j < n; ++j) {
              double c = pk.coef[j] + pl.coef[j];
              if (c != 0.0) coef.emplace_back(static_cast<int>(j), c);
            }
            lp.add_row(std::move(coef), RowSense::ge, ft.on_rhs - pk.offset - pl.offset);
          }
          if (ft.block == 0)
            lp.obj_offset += ft.coeff;
          else
            con_shift[static_cast<std::size_t>(ft.block - 1)] += ft.coeff;
        } else {
          // every max piece + pinned min piece <= off_rhs
          const AffineFn& pl = ft.inner->cve[static_cast<std::size_t>(a.piece)];
          for (const auto& pk : ft.inner->cvx) {
            std::vector<std::pair<int, double>> coef;
            for (std::size_t j = 0; j < n; ++j) {
              double c = pk.coef[j] + pl.coef[j];
              if (c != 0.0) coef.emplace_back(static_cast<int>(j), c);
            }
            lp.add_row(std::move(coef), RowSense::le, ft.off_rhs - pk.offset - pl.offset);
          }
        }
      }
      for (std::size_t i = 0; i < con_linear.size(); ++i) {
        std::vector<std::pair<int, double>> coef;
        for (std::size_t j = 0; j < n; ++j)
          if (con_linear[i]->coef[j] != 0.0)
            coef.emplace_back(static_cast<int>(j), con_linear[i]->coef[j]);
        lp.add_row(std::move(coef), RowSense::ge, -con_linear[i]->offset - con_shift[i]);
      }
      if (prox && prox->rho > 0.0) {
        auto cuts = encode_prox(prox->center, prox->rho, *box, prox->segments);
        for (std::size_t c = 0; c < cuts.size(); ++c) {
          double dev = std::max(std::abs(box->lower[c] - prox->center[c]),
                                std::abs(box->upper[c] - prox->center[c]));
          int q = lp.add_var(-0.5 * prox->rho * dev * dev - 1.0, 0.0, 1.0);
          for (const auto& cut : cuts[c]) {
            std::vector<std::pair<int, double>> coef{{q, 1.0}};
            if (cut.slope != 0.0) coef.emplace_back(static_cast<int>(c), -cut.slope);
            lp.add_row(std::move(coef), RowSense::le, cut.offset);
          }
        }
      }

      LpSolution sol = solve_lp(lp);
      if (sol.status == LpStatus::optimal && sol.objective > best.value) {
        best.feasible = true;
        best.value = sol.objective;
        best.x.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(n));
        best.pattern = pattern;
      }

      std::size_t t = 0;
      for (; t < terms.size(); ++t) {
        if (++pos[t] < alts[t].size()) break;
        pos[t] = 0;
      }
      if (t == terms.size()) break;
    }
    return best;
  }
};

}  // namespace

OracleResult oracle_solve(const HeavisideProblem& p, const OracleOptions& opts) {
  p.validate();
  Enumerator e;
  e.box = &p.domain;
  e.obj_linear = &p.objective.linear;
  e.opts = &opts;
  auto add_block = [&](const HeavisideExpr& expr, int block) {
    for (const auto& t : expr.terms) {
      FlatTerm ft;
      ft.block = block;
      ft.coeff = t.coeff;
      ft.inner = &t.inner;
      if (t.kind == HeavisideKind::closed_at_zero) {
        ft.on_rhs = 0.0;
        ft.off_rhs = -opts.tau_strict;
      } else {
        ft.on_rhs = opts.tau_strict;
        ft.off_rhs = 0.0;
      }
      e.terms.push_back(ft);
    }
  };
  add_block(p.objective, 0);
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    e.con_linear.push_back(&p.constraints[i].linear);
    add_block(p.constraints[i], static_cast<int>(i) + 1);
  }
  return e.run();
}

OracleResult oracle_solve(const EpsProblem& p, const OracleOptions& opts,
                          const std::optional<ProxSpec>& prox) {
  Enumerator e;
  e.box = &p.domain;
  e.obj_linear = &p.objective.linear;
  e.opts = &opts;
  e.prox = prox;
  auto add_block = [&](const EpsExpr& expr, int block) {
    for (const auto& t : expr.terms) {
      FlatTerm ft;
      ft.block = block;
      ft.coeff = t.coeff;
      ft.inner = &t.inner;
      if (t.kind == EpsKind::closed_at_zero) {
        ft.on_rhs = 0.0;
        ft.off_rhs = -opts.tau_strict;
      } else {
        ft.on_rhs = -p.eps + opts.tau_strict;
        ft.off_rhs = -p.eps;
      }
      e.terms.push_back(ft);
    }
  };
  add_block(p.objective, 0);
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    e.con_linear.push_back(&p.constraints[i].linear);
    add_block(p.constraints[i], static_cast<int>(i) + 1);
  }
  return e.run();
}

OracleResult oracle_solve(const DecomposedProblem& dec, const OracleOptions& opts) {
  std::optional<ProxSpec> prox;
  if (dec.rho > 0.0) prox = ProxSpec{dec.center, dec.rho, 8};
  return oracle_solve(dec.surrogate, opts, prox);
}

}  // namespace hscop
