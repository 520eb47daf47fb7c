#include "hscop/model.hpp"

#include <cmath>
#include <limits>

namespace hscop {

void Box::validate() const {
  if (lower.size() != upper.size()) throw std::invalid_argument("Box: bound size mismatch");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      throw std::invalid_argument("Box: bounds must be finite");
    if (lower[i] > upper[i]) throw std::invalid_argument("Box: lower > upper");
  }
  for (const auto& r : rows)
    if (r.coef.size() != lower.size()) throw std::invalid_argument("Box: row dimension mismatch");
}

bool Box::contains(std::span<const double> x, double tol) const {
  if (x.size() != lower.size()) throw std::invalid_argument("Box: point dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
  for (const auto& r : rows)
    if (!r.satisfied(x, tol)) return false;
  return true;
}

std::vector<double> Box::center() const {
  std::vector<double> c(lower.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (lower[i] + upper[i]);
  return c;
}

namespace {

void validate_expr(const HeavisideExpr& e, std::size_t n, const char* what) {
  if (e.linear.dim() != n) throw std::invalid_argument(std::string(what) + ": linear dim mismatch");
  for (const auto& t : e.terms) {
    if (t.coeff == 0.0) throw std::invalid_argument(std::string(what) + ": zero coefficient");
    t.inner.validate();
    if (t.inner.dim() != n) throw std::invalid_argument(std::string(what) + ": inner dim mismatch");
  }
}

}  // namespace

void HeavisideProblem::validate() const {
  domain.validate();
  std::size_t n = domain.dim();
  validate_expr(objective, n, "objective");
  for (const auto& c : constraints) validate_expr(c, n, "constraint");
}

bool check_feasible(const HeavisideProblem& p, std::span<const double> x, double tau_feas) {
  if (!p.domain.contains(x, tau_feas)) return false;
  for (const auto& c : p.constraints)
    if (c.value(x) < -tau_feas) return false;
  return true;
}

bool check_feasible(const ProductProblem& p, std::span<const double> x, double tau_feas) {
  if (!p.domain.contains(x, tau_feas)) return false;
  for (const auto& c : p.constraints)
    if (c.value(x) < -tau_feas) return false;
  return true;
}

ZeroIndexSets zero_index_sets(const HeavisideProblem& p, std::span<const double> x, double tol) {
  if (tol < 0) throw std::invalid_argument("zero_index_sets: tol must be nonnegative");
  ZeroIndexSets out;
  out.cls.resize(p.constraints.size() + 1);
  auto classify = [&](const HeavisideExpr& e, std::vector<TermSignClass>& dst) {
    dst.reserve(e.terms.size());
    for (const auto& t : e.terms) {
      double v = t.inner.value(x);
      if (std::abs(v) <= tol)
        dst.push_back(TermSignClass::zero);
      else
        dst.push_back(v > tol ? TermSignClass::positive : TermSignClass::negative);
    }
  };
  classify(p.objective, out.cls[0]);
  for (std::size_t i = 0; i < p.constraints.size(); ++i) classify(p.constraints[i], out.cls[i + 1]);
  return out;
}

LsiReport probe_lsi(const HeavisideProblem& p, std::span<const double> x, double radius,
                    int samples, std::uint64_t seed) {
  if (radius <= 0) throw std::invalid_argument("probe_lsi: radius must be positive");
  if (samples < 1) throw std::invalid_argument("probe_lsi: samples must be >= 1");

  ZeroIndexSets sets = zero_index_sets(p, x);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::size_t n = p.dim();

  // One shared sample cloud in (radius-ball around x) ∩ Box.
  std::vector<std::vector<double>> cloud;
  cloud.reserve(static_cast<std::size_t>(samples));
  int attempts = 0;
  while (cloud.size() < static_cast<std::size_t>(samples) && attempts < samples * 50) {
    ++attempts;
    std::vector<double> pt(n);
    for (std::size_t i = 0; i < n; ++i) pt[i] = x[i] + radius * unit(rng);
    double d2 = 0;
    for (std::size_t i = 0; i < n; ++i) d2 += (pt[i] - x[i]) * (pt[i] - x[i]);
    if (d2 > radius * radius) continue;
    bool in_box = true;
    for (std::size_t i = 0; i < n; ++i)
      if (pt[i] < p.domain.lower[i] || pt[i] > p.domain.upper[i]) {
        in_box = false;
        break;
      }
    if (in_box) cloud.push_back(std::move(pt));
  }

  LsiReport report;
  auto probe_block = [&](const HeavisideExpr& e, int block) {
    for (std::size_t j = 0; j < e.terms.size(); ++j) {
      if (e.terms[j].coeff >= 0) continue;
      if (sets.cls[block][j] != TermSignClass::zero) continue;
      LsiProbeEntry entry;
      entry.block = block;
      entry.term = static_cast<int>(j);
      for (const auto& pt : cloud) {
        if (e.terms[j].inner.value(pt) < 0) {
          entry.satisfied = false;
          entry.witness = pt;
          break;
        }
      }
      report.entries.push_back(std::move(entry));
    }
  };
  probe_block(p.objective, 0);
  for (std::size_t i = 0; i < p.constraints.size(); ++i)
    probe_block(p.constraints[i], static_cast<int>(i) + 1);
  return report;
}

}  // namespace hscop
