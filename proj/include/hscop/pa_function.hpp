#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace hscop {

// One affine function a·x + alpha on R^n.
struct AffineFn {
  std::vector<double> coef;
  double offset = 0.0;

  AffineFn() = default;
  AffineFn(std::vector<double> c, double off) : coef(std::move(c)), offset(off) {}

  static AffineFn zero(std::size_t n) { return AffineFn(std::vector<double>(n, 0.0), 0.0); }

  std::size_t dim() const { return coef.size(); }

  double value(std::span<const double> x) const {
    assert(x.size() == coef.size());
    double s = offset;
    for (std::size_t i = 0; i < coef.size(); ++i) s += coef[i] * x[i];
    return s;
  }
};

// Difference-of-convex piecewise-affine function: pointwise max of the
// `cvx` pieces plus pointwise min of the `cve` pieces.  Both lists are
// nonempty; all pieces share one dimension.
struct PAFunction {
  std::vector<AffineFn> cvx;
  std::vector<AffineFn> cve;

  PAFunction() = default;
  PAFunction(std::vector<AffineFn> max_pieces, std::vector<AffineFn> min_pieces)
      : cvx(std::move(max_pieces)), cve(std::move(min_pieces)) {
    validate();
  }

  // max{pieces} with a zero min part.
  static PAFunction pure_max(std::vector<AffineFn> pieces) {
    if (pieces.empty()) throw std::invalid_argument("PAFunction: empty max part");
    std::size_t n = pieces.front().dim();
    return PAFunction(std::move(pieces), {AffineFn::zero(n)});
  }

  // min{pieces} with a zero max part.
  static PAFunction pure_min(std::vector<AffineFn> pieces) {
    if (pieces.empty()) throw std::invalid_argument("PAFunction: empty min part");
    std::size_t n = pieces.front().dim();
    return PAFunction({AffineFn::zero(n)}, std::move(pieces));
  }

  static PAFunction affine(AffineFn f) {
    std::size_t n = f.dim();
    return PAFunction({std::move(f)}, {AffineFn::zero(n)});
  }

  std::size_t dim() const { return cvx.empty() ? 0 : cvx.front().dim(); }

  void validate() const {
    if (cvx.empty() || cve.empty())
      throw std::invalid_argument("PAFunction: both piece lists must be nonempty");
    std::size_t n = cvx.front().dim();
    for (const auto& p : cvx)
      if (p.dim() != n) throw std::invalid_argument("PAFunction: inconsistent dimensions");
    for (const auto& p : cve)
      if (p.dim() != n) throw std::invalid_argument("PAFunction: inconsistent dimensions");
  }

  double max_part(std::span<const double> x) const {
    double m = cvx.front().value(x);
    for (std::size_t k = 1; k < cvx.size(); ++k) m = std::max(m, cvx[k].value(x));
    return m;
  }

  double min_part(std::span<const double> x) const {
    double m = cve.front().value(x);
    for (std::size_t l = 1; l < cve.size(); ++l) m = std::min(m, cve[l].value(x));
    return m;
  }

  // Evaluation order is fixed (max, then min, then one addition) so that
  // piece-substituted variants compare bitwise against the full function.
  double value(std::span<const double> x) const { return max_part(x) + min_part(x); }
};

}  // namespace hscop
