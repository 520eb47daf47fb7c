#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "hscop/pa_function.hpp"

namespace hscop {

enum class HeavisideKind : std::uint8_t { closed_at_zero, open_at_zero };

// Exact sign test, no tolerance band: ties at t == 0 resolve purely by kind.
inline double heaviside(HeavisideKind kind, double t) {
  if (kind == HeavisideKind::closed_at_zero) return t >= 0.0 ? 1.0 : 0.0;
  return t > 0.0 ? 1.0 : 0.0;
}

struct HeavisideTerm {
  double coeff = 0.0;  // nonzero
  HeavisideKind kind = HeavisideKind::closed_at_zero;
  PAFunction inner;
};

// Affine part plus a signed combination of Heaviside composites.  Constraint
// rows fold their threshold into the affine offset, so feasibility of a row
// is simply value(x) >= 0.
struct HeavisideExpr {
  AffineFn linear;
  std::vector<HeavisideTerm> terms;

  std::size_t dim() const { return linear.dim(); }

  double value(std::span<const double> x) const {
    double s = linear.value(x);
    for (const auto& t : terms) s += t.coeff * heaviside(t.kind, t.inner.value(x));
    return s;
  }
};

enum class RowSense : std::uint8_t { le, ge, eq };

struct LinearRow {
  std::vector<double> coef;
  RowSense sense = RowSense::le;
  double rhs = 0.0;

  bool satisfied(std::span<const double> x, double tol) const {
    AffineFn a{coef, 0.0};
    double v = a.value(x);
    switch (sense) {
      case RowSense::le: return v <= rhs + tol;
      case RowSense::ge: return v >= rhs - tol;
      case RowSense::eq: return std::abs(v - rhs) <= tol;
    }
    return false;
  }
};

// Bounded box plus optional linear rows.  Finite bounds are required: the
// convergence guarantees of the solvers need a compact domain.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<LinearRow> rows;

  std::size_t dim() const { return lower.size(); }

  void validate() const;
  bool contains(std::span<const double> x, double tol) const;
  std::vector<double> center() const;
};

struct HeavisideProblem {
  HeavisideExpr objective;
  std::vector<HeavisideExpr> constraints;  // feasible iff value(x) >= 0
  Box domain;

  std::size_t dim() const { return domain.dim(); }
  void validate() const;

  double objective_value(std::span<const double> x) const { return objective.value(x); }
};

// One term of a product problem: coeff * 1_{[0,inf)}(closed) * 1_{(0,inf)}(open).
// Either factor may be absent, in which case the term degenerates to a plain
// Heaviside composite of the remaining factor.
struct ProductTerm {
  double coeff = 0.0;
  std::optional<PAFunction> closed_inner;
  std::optional<PAFunction> open_inner;

  double value(std::span<const double> x) const {
    double v = coeff;
    if (closed_inner) v *= heaviside(HeavisideKind::closed_at_zero, closed_inner->value(x));
    if (open_inner) v *= heaviside(HeavisideKind::open_at_zero, open_inner->value(x));
    return v;
  }
};

struct ProductExpr {
  AffineFn linear;
  std::vector<ProductTerm> terms;

  double value(std::span<const double> x) const {
    double s = linear.value(x);
    for (const auto& t : terms) s += t.value(x);
    return s;
  }
};

struct ProductProblem {
  ProductExpr objective;
  std::vector<ProductExpr> constraints;
  Box domain;

  std::size_t dim() const { return domain.dim(); }
  double objective_value(std::span<const double> x) const { return objective.value(x); }
};

constexpr double kDefaultFeasTol = 1e-9;
constexpr double kDefaultZeroTol = 1e-8;

// Indicators are evaluated exactly; tau_feas applies only to the affine
// comparisons (constraint rows and box membership).
bool check_feasible(const HeavisideProblem& p, std::span<const double> x,
                    double tau_feas = kDefaultFeasTol);

bool check_feasible(const ProductProblem& p, std::span<const double> x,
                    double tau_feas = kDefaultFeasTol);

enum class TermSignClass : std::uint8_t { zero, positive, negative };

// Per-block classification of the inner-function values at a point.  Block 0
// is the objective expression, block i >= 1 the (i-1)-th constraint.
struct ZeroIndexSets {
  std::vector<std::vector<TermSignClass>> cls;

  bool in_zero_set(int block, int term) const {
    return cls[block][term] == TermSignClass::zero;
  }
};

ZeroIndexSets zero_index_sets(const HeavisideProblem& p, std::span<const double> x,
                              double tol = kDefaultZeroTol);

// Sampling probe for local sign invariance of the inner functions that vanish
// at x with a negative coefficient.  "satisfied" only means that no negative
// value was found among the samples; it is a heuristic certificate.
struct LsiProbeEntry {
  int block = 0;
  int term = 0;
  bool satisfied = true;
  std::vector<double> witness;  // point with inner < 0, when found
};

struct LsiReport {
  std::vector<LsiProbeEntry> entries;
  bool all_satisfied() const {
    for (const auto& e : entries)
      if (!e.satisfied) return false;
    return true;
  }
};

LsiReport probe_lsi(const HeavisideProblem& p, std::span<const double> x, double radius,
                    int samples, std::uint64_t seed = 0);

}  // namespace hscop
