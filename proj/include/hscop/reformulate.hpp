#pragma once

#include <cstdint>
#include <functional>

#include "hscop/model.hpp"

namespace hscop {

// After the epsilon approximation every term is either a closed Heaviside at
// zero (positive coefficients) or an open Heaviside at -eps (negative
// coefficients).  The open kind is evaluated through the identity
// 1_{(-eps,inf)}(t) = 1 - 1_{[0,inf)}(-t - eps).
enum class EpsKind : std::uint8_t { closed_at_zero, open_at_minus_eps };

struct EpsTerm {
  double coeff = 0.0;
  EpsKind kind = EpsKind::closed_at_zero;
  PAFunction inner;

  double indicator(std::span<const double> x, double eps) const {
    double t = inner.value(x);
    if (kind == EpsKind::closed_at_zero) return t >= 0.0 ? 1.0 : 0.0;
    return t > -eps ? 1.0 : 0.0;
  }
};

struct EpsExpr {
  AffineFn linear;
  std::vector<EpsTerm> terms;

  double value(std::span<const double> x, double eps) const {
    double s = linear.value(x);
    for (const auto& t : terms) s += t.coeff * t.indicator(x, eps);
    return s;
  }
};

struct EpsProblem {
  double eps = 0.0;
  EpsExpr objective;
  std::vector<EpsExpr> constraints;
  Box domain;

  std::size_t dim() const { return domain.dim(); }
  std::size_t num_blocks() const { return constraints.size() + 1; }
  const EpsExpr& block(std::size_t i) const { return i == 0 ? objective : constraints[i - 1]; }
  EpsExpr& block(std::size_t i) { return i == 0 ? objective : constraints[i - 1]; }
  std::size_t total_terms() const;

  double objective_value(std::span<const double> x) const { return objective.value(x, eps); }
  bool feasible(std::span<const double> x, double tau_feas = kDefaultFeasTol) const;
};

// Rewrites negative-coefficient closed terms as open Heavisides at -eps,
// restoring upper semicontinuity of the objective and closedness of the
// feasible set.  Positive terms keep their closed indicator; terms that were
// open at zero get the analogous one-sided shift.
EpsProblem make_eps_problem(const HeavisideProblem& p, double eps);

// min{f, g + shift} of two dc piecewise-affine functions, expanded so the
// result stays in the max-plus-min form.  Piece counts multiply.
PAFunction dc_min(const PAFunction& f, const PAFunction& g, double shift);

// Rewrites each closed*open product term as a single Heaviside composite of a
// pointwise min: positive terms become closed with inner min{phi, vphi - eps},
// negative terms open at -eps with inner min{phi, vphi + eps}.  Absent factors
// degenerate to the matching single-factor shift.
EpsProblem flatten_products(const ProductProblem& p, double eps);

// Indices of the near-maximizing / near-minimizing affine pieces at x.
struct ActiveSets {
  std::vector<int> max_pieces;  // nonempty
  std::vector<int> min_pieces;  // nonempty
};

ActiveSets active_index_sets(const PAFunction& f, std::span<const double> x, double delta);

// Concave upper envelope member: one fixed max piece plus the full min part.
PAFunction surrogate_concave(const PAFunction& f, int k);
// Convex member: full max part plus one fixed min piece.
PAFunction surrogate_convex(const PAFunction& f, int l);

// One chosen (max piece, min piece) pair per term, indexed by block.
struct PieceSelection {
  std::vector<std::vector<std::pair<int, int>>> kl;

  std::pair<int, int> at(std::size_t block, std::size_t term) const { return kl[block][term]; }
};

// The product set of per-term delta-enlarged active pairs at a point.
struct SelectionSet {
  std::vector<std::vector<ActiveSets>> sets;  // [block][term]

  // Saturates at 2^63-1.
  std::uint64_t cardinality() const;
  // Lexicographically smallest pair per term (sets are sorted ascending).
  PieceSelection first() const;
  // Visits every selection; returns false from the callback to stop early.
  void for_each(const std::function<bool(const PieceSelection&)>& fn) const;
};

SelectionSet enumerate_selections(const EpsProblem& p, std::span<const double> x, double delta);

// Enlargement may be a single scalar or one value per (block, term).
SelectionSet enumerate_selections(const EpsProblem& p, std::span<const double> x,
                                  const std::vector<std::vector<double>>& delta);

// The epsilon problem with every positive term's inner replaced by a concave
// surrogate and every negative term's inner by a convex one, so indicator
// rows linearize without piece enumeration.  `surrogate` carries the
// substituted expressions; `base` keeps the originals for invariant checks.
struct DecomposedProblem {
  EpsProblem surrogate;
  PieceSelection selection;
  std::vector<double> center;
  double rho = 0.0;

  double eps() const { return surrogate.eps; }
  std::size_t dim() const { return surrogate.dim(); }

  double objective_value(std::span<const double> x) const {
    return surrogate.objective_value(x);
  }
  bool feasible(std::span<const double> x, double tau_feas = kDefaultFeasTol) const {
    return surrogate.feasible(x, tau_feas);
  }
};

DecomposedProblem make_decomposed(const EpsProblem& p, const PieceSelection& sel,
                                  std::span<const double> center, double rho);

}  // namespace hscop
