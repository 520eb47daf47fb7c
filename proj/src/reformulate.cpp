#include "hscop/reformulate.hpp"

#include <cmath>
#include <limits>

namespace hscop {

std::size_t EpsProblem::total_terms() const {
  std::size_t n = objective.terms.size();
  for (const auto& c : constraints) n += c.terms.size();
  return n;
}

bool EpsProblem::feasible(std::span<const double> x, double tau_feas) const {
  if (!domain.contains(x, tau_feas)) return false;
  for (const auto& c : constraints)
    if (c.value(x, eps) < -tau_feas) return false;
  return true;
}

namespace {

// f + c realized on the min part, so min(pieces + c) = min(pieces) + c.
PAFunction shift_pa(PAFunction f, double c) {
  for (auto& p : f.cve) p.offset += c;
  return f;
}

EpsTerm resolve_term(const HeavisideTerm& t, double eps) {
  EpsTerm out;
  out.coeff = t.coeff;
  if (t.coeff > 0) {
    out.kind = EpsKind::closed_at_zero;
    out.inner = t.kind == HeavisideKind::closed_at_zero ? t.inner : shift_pa(t.inner, -eps);
  } else {
    out.kind = EpsKind::open_at_minus_eps;
    out.inner = t.inner;
  }
  return out;
}

}  // namespace

EpsProblem make_eps_problem(const HeavisideProblem& p, double eps) {
  if (eps <= 0) throw std::invalid_argument("make_eps_problem: eps must be positive");
  p.validate();
  EpsProblem out;
  out.eps = eps;
  out.domain = p.domain;
  auto convert = [&](const HeavisideExpr& e) {
    EpsExpr r;
    r.linear = e.linear;
    r.terms.reserve(e.terms.size());
    for (const auto& t : e.terms) r.terms.push_back(resolve_term(t, eps));
    return r;
  };
  out.objective = convert(p.objective);
  out.constraints.reserve(p.constraints.size());
  for (const auto& c : p.constraints) out.constraints.push_back(convert(c));
  return out;
}

PAFunction dc_min(const PAFunction& f, const PAFunction& g, double shift) {
  f.validate();
  g.validate();
  if (f.dim() != g.dim()) throw std::invalid_argument("dc_min: dimension mismatch");
  std::size_t n = f.dim();

  PAFunction out;
  out.cvx.reserve(f.cvx.size() * g.cvx.size());
  for (const auto& a : f.cvx)
    for (const auto& b : g.cvx) {
      AffineFn s = a;
      for (std::size_t i = 0; i < n; ++i) s.coef[i] += b.coef[i];
      s.offset += b.offset;
      out.cvx.push_back(std::move(s));
    }
  out.cve.reserve(f.cve.size() * g.cvx.size() + g.cve.size() * f.cvx.size());
  for (const auto& a : f.cve)
    for (const auto& b : g.cvx) {
      AffineFn s = a;
      for (std::size_t i = 0; i < n; ++i) s.coef[i] -= b.coef[i];
      s.offset -= b.offset;
      out.cve.push_back(std::move(s));
    }
  for (const auto& a : g.cve)
    for (const auto& b : f.cvx) {
      AffineFn s = a;
      for (std::size_t i = 0; i < n; ++i) s.coef[i] -= b.coef[i];
      s.offset += shift - b.offset;
      out.cve.push_back(std::move(s));
    }
  return out;
}

EpsProblem flatten_products(const ProductProblem& p, double eps) {
  if (eps <= 0) throw std::invalid_argument("flatten_products: eps must be positive");
  p.domain.validate();
  EpsProblem out;
  out.eps = eps;
  out.domain = p.domain;
  auto convert = [&](const ProductExpr& e) {
    EpsExpr r;
    r.linear = e.linear;
    r.terms.reserve(e.terms.size());
    for (const auto& t : e.terms) {
      if (t.coeff == 0.0) throw std::invalid_argument("flatten_products: zero coefficient");
      if (!t.closed_inner && !t.open_inner)
        throw std::invalid_argument("flatten_products: term without factors");
      EpsTerm et;
      et.coeff = t.coeff;
      bool positive = t.coeff > 0;
      et.kind = positive ? EpsKind::closed_at_zero : EpsKind::open_at_minus_eps;
      if (t.closed_inner && t.open_inner) {
        et.inner = dc_min(*t.closed_inner, *t.open_inner, positive ? -eps : eps);
      } else if (t.closed_inner) {
        et.inner = *t.closed_inner;
      } else {
        et.inner = positive ? shift_pa(*t.open_inner, -eps) : *t.open_inner;
      }
      r.terms.push_back(std::move(et));
    }
    return r;
  };
  out.objective = convert(p.objective);
  out.constraints.reserve(p.constraints.size());
  for (const auto& c : p.constraints) out.constraints.push_back(convert(c));
  return out;
}

ActiveSets active_index_sets(const PAFunction& f, std::span<const double> x, double delta) {
  if (delta < 0) throw std::invalid_argument("active_index_sets: delta must be nonnegative");
  ActiveSets out;
  double mx = f.max_part(x);
  for (std::size_t k = 0; k < f.cvx.size(); ++k)
    if (f.cvx[k].value(x) >= mx - delta) out.max_pieces.push_back(static_cast<int>(k));
  double mn = f.min_part(x);
  for (std::size_t l = 0; l < f.cve.size(); ++l)
    if (f.cve[l].value(x) <= mn + delta) out.min_pieces.push_back(static_cast<int>(l));
  return out;
}

PAFunction surrogate_concave(const PAFunction& f, int k) {
  if (k < 0 || static_cast<std::size_t>(k) >= f.cvx.size())
    throw std::out_of_range("surrogate_concave: piece index out of range");
  PAFunction out;
  out.cvx = {f.cvx[static_cast<std::size_t>(k)]};
  out.cve = f.cve;
  return out;
}

PAFunction surrogate_convex(const PAFunction& f, int l) {
  if (l < 0 || static_cast<std::size_t>(l) >= f.cve.size())
    throw std::out_of_range("surrogate_convex: piece index out of range");
  PAFunction out;
  out.cvx = f.cvx;
  out.cve = {f.cve[static_cast<std::size_t>(l)]};
  return out;
}

std::uint64_t SelectionSet::cardinality() const {
  const std::uint64_t cap = std::numeric_limits<std::int64_t>::max();
  std::uint64_t total = 1;
  for (const auto& block : sets)
    for (const auto& s : block) {
      std::uint64_t m =
          static_cast<std::uint64_t>(s.max_pieces.size()) * s.min_pieces.size();
      if (m == 0) return 0;
      if (total > cap / m) return cap;
      total *= m;
    }
  return total;
}

PieceSelection SelectionSet::first() const {
  PieceSelection sel;
  sel.kl.resize(sets.size());
  for (std::size_t b = 0; b < sets.size(); ++b) {
    sel.kl[b].reserve(sets[b].size());
    for (const auto& s : sets[b]) sel.kl[b].emplace_back(s.max_pieces.front(), s.min_pieces.front());
  }
  return sel;
}

void SelectionSet::for_each(const std::function<bool(const PieceSelection&)>& fn) const {
  // Odometer over the flattened (term, k-or-l slot) positions.
  struct Slot {
    std::size_t block, term;
    const std::vector<int>* choices;
    std::size_t pos = 0;
  };
  std::vector<Slot> slots;
  for (std::size_t b = 0; b < sets.size(); ++b)
    for (std::size_t t = 0; t < sets[b].size(); ++t) {
      slots.push_back({b, t, &sets[b][t].max_pieces, 0});
      slots.push_back({b, t, &sets[b][t].min_pieces, 0});
    }
  PieceSelection sel = first();
  while (true) {
    for (const auto& s : slots) {
      auto& pair = sel.kl[s.block][s.term];
      if (s.choices == &sets[s.block][s.term].max_pieces)
        pair.first = (*s.choices)[s.pos];
      else
        pair.second = (*s.choices)[s.pos];
    }
    if (!fn(sel)) return;
    std::size_t i = 0;
    for (; i < slots.size(); ++i) {
      if (++slots[i].pos < slots[i].choices->size()) break;
      slots[i].pos = 0;
    }
    if (i == slots.size()) return;
  }
}

SelectionSet enumerate_selections(const EpsProblem& p, std::span<const double> x, double delta) {
  std::vector<std::vector<double>> d(p.num_blocks());
  for (std::size_t b = 0; b < p.num_blocks(); ++b) d[b].assign(p.block(b).terms.size(), delta);
  return enumerate_selections(p, x, d);
}

SelectionSet enumerate_selections(const EpsProblem& p, std::span<const double> x,
                                  const std::vector<std::vector<double>>& delta) {
  if (delta.size() != p.num_blocks())
    throw std::invalid_argument("enumerate_selections: delta shape mismatch");
  SelectionSet out;
  out.sets.resize(p.num_blocks());
  for (std::size_t b = 0; b < p.num_blocks(); ++b) {
    const auto& terms = p.block(b).terms;
    if (delta[b].size() != terms.size())
      throw std::invalid_argument("enumerate_selections: delta shape mismatch");
    out.sets[b].reserve(terms.size());
    for (std::size_t t = 0; t < terms.size(); ++t)
      out.sets[b].push_back(active_index_sets(terms[t].inner, x, delta[b][t]));
  }
  return out;
}

DecomposedProblem make_decomposed(const EpsProblem& p, const PieceSelection& sel,
                                  std::span<const double> center, double rho) {
  if (rho < 0) throw std::invalid_argument("make_decomposed: rho must be nonnegative");
  if (center.size() != p.dim()) throw std::invalid_argument("make_decomposed: center dim mismatch");
  if (sel.kl.size() != p.num_blocks())
    throw std::invalid_argument("make_decomposed: selection shape mismatch");

  DecomposedProblem out;
  out.surrogate = p;
  out.selection = sel;
  out.center.assign(center.begin(), center.end());
  out.rho = rho;
  for (std::size_t b = 0; b < p.num_blocks(); ++b) {
    auto& terms = out.surrogate.block(b).terms;
    if (sel.kl[b].size() != terms.size())
      throw std::invalid_argument("make_decomposed: selection shape mismatch");
    for (std::size_t t = 0; t < terms.size(); ++t) {
      auto [k, l] = sel.kl[b][t];
      terms[t].inner = terms[t].coeff > 0 ? surrogate_concave(terms[t].inner, k)
                                          : surrogate_convex(terms[t].inner, l);
    }
  }
  return out;
}

}  // namespace hscop
