#include <algorithm>
#include <cmath>
#include <ostream>

#include "hscop/milp.hpp"

namespace hscop {

IndexPartition IndexPartition::all_free(const EpsProblem& p) {
  IndexPartition part;
  part.state.resize(p.num_blocks());
  for (std::size_t b = 0; b < p.num_blocks(); ++b)
    part.state[b].assign(p.block(b).terms.size(), TermState::free_binary);
  return part;
}

IndexPartition::Counts IndexPartition::counts() const {
  Counts c;
  for (const auto& block : state)
    for (auto s : block) {
      if (s == TermState::free_binary)
        ++c.free;
      else if (s == TermState::fixed_one)
        ++c.fixed_one;
      else
        ++c.fixed_zero;
    }
  return c;
}

namespace {

std::pair<double, double> affine_range(const AffineFn& f, const Box& box) {
  double lo = f.offset, hi = f.offset;
  for (std::size_t i = 0; i < f.coef.size(); ++i) {
    double a = f.coef[i] * box.lower[i];
    double b = f.coef[i] * box.upper[i];
    lo += std::min(a, b);
    hi += std::max(a, b);
  }
  return {lo, hi};
}

std::pair<double, double> max_part_range(const PAFunction& f, const Box& box) {
  double lo = -kInf, hi = -kInf;
  for (const auto& p : f.cvx) {
    auto [l, h] = affine_range(p, box);
    lo = std::max(lo, l);
    hi = std::max(hi, h);
  }
  return {lo, hi};
}

std::pair<double, double> min_part_range(const PAFunction& f, const Box& box) {
  double lo = kInf, hi = kInf;
  for (const auto& p : f.cve) {
    auto [l, h] = affine_range(p, box);
    lo = std::min(lo, l);
    hi = std::min(hi, h);
  }
  return {lo, hi};
}

std::pair<double, double> pa_range(const PAFunction& f, const Box& box) {
  auto [alo, ahi] = max_part_range(f, box);
  auto [blo, bhi] = min_part_range(f, box);
  return {alo + blo, ahi + bhi};
}

}  // namespace

double compute_big_m(const EpsProblem& p) {
  double worst = 0.0;
  for (std::size_t b = 0; b < p.num_blocks(); ++b)
    for (const auto& t : p.block(b).terms) {
      auto [lo, hi] = pa_range(t.inner, p.domain);
      worst = std::max({worst, std::abs(lo), std::abs(hi)});
    }
  return 1.05 * std::max(worst, 1e-6);
}

double compute_big_m(const DecomposedProblem& dec) { return compute_big_m(dec.surrogate); }

std::vector<std::vector<ProxCut>> encode_prox(std::span<const double> center, double rho,
                                              const Box& box, int segments) {
  if (segments < 1) throw std::invalid_argument("encode_prox: segments must be >= 1");
  std::vector<std::vector<ProxCut>> cuts(center.size());
  if (rho == 0.0) return cuts;
  for (std::size_t c = 0; c < center.size(); ++c) {
    double lo = box.lower[c] - center[c];
    double hi = box.upper[c] - center[c];
    auto& list = cuts[c];
    list.push_back({0.0, 0.0});  // exact cut at the center
    for (int i = 0; i < segments; ++i) {
      double t = lo + (hi - lo) * (i + 0.5) / segments;
      if (t == 0.0) continue;
      // tangent of -(rho/2) t^2 expressed in x_c: slope -rho*t, offset picks
      // up the center shift
      double slope = -rho * t;
      double offset = 0.5 * rho * t * t + rho * t * center[c];
      list.push_back({slope, offset});
    }
  }
  return cuts;
}

double prox_value(const ProxSpec& spec, const Box& box, std::span<const double> x) {
  if (spec.rho == 0.0) return 0.0;
  auto cuts = encode_prox(spec.center, spec.rho, box, spec.segments);
  double total = 0.0;
  for (std::size_t c = 0; c < cuts.size(); ++c) {
    double q = kInf;
    for (const auto& cut : cuts[c]) q = std::min(q, cut.slope * x[c] + cut.offset);
    total += q;
  }
  return total;
}

namespace {

class IpBuilder {
 public:
  IpBuilder(const EpsProblem& p, const IndexPartition& part, double big_m,
            const std::optional<ProxSpec>& prox, const MilpBuildOptions& opts)
      : p_(p), part_(part), big_m_(big_m), prox_(prox), opts_(opts) {}

  MilpModel build() {
    const std::size_t n = p_.dim();
    model_.eps = p_.eps;
    model_.big_m = big_m_;
    model_.num_structural = static_cast<int>(n);
    model_.prox = prox_;
    for (std::size_t j = 0; j < n; ++j)
      add_var(p_.domain.lower[j], p_.domain.upper[j], 0.0, "x" + std::to_string(j), false);
    for (const auto& r : p_.domain.rows) {
      std::vector<std::pair<int, double>> coef;
      for (std::size_t j = 0; j < r.coef.size(); ++j)
        if (r.coef[j] != 0.0) coef.emplace_back(static_cast<int>(j), r.coef[j]);
      add_row(std::move(coef), r.sense, r.rhs, {});
    }
    if (opts_.residual_lambda > 0.0) {
      double cap = residual_cap();
      model_.residual_var = add_var(0.0, cap, -opts_.residual_lambda, "gamma", false);
    }

    model_.z_index.resize(p_.num_blocks());
    for (std::size_t b = 0; b < p_.num_blocks(); ++b) {
      const EpsExpr& e = p_.block(b);
      model_.z_index[b].assign(e.terms.size(), -1);
      std::vector<std::pair<int, double>> agg;
      double agg_const = e.linear.offset;
      for (std::size_t j = 0; j < e.linear.coef.size(); ++j)
        if (e.linear.coef[j] != 0.0) agg.emplace_back(static_cast<int>(j), e.linear.coef[j]);
      for (std::size_t t = 0; t < e.terms.size(); ++t)
        encode_term(b, t, e.terms[t], part_.at(b, t), agg, agg_const);
      if (b == 0) {
        for (auto [v, c] : agg) model_.lp.obj[static_cast<std::size_t>(v)] += c;
        model_.lp.obj_offset += agg_const;
      } else {
        if (model_.residual_var >= 0) agg.emplace_back(model_.residual_var, 1.0);
        add_row(std::move(agg), RowSense::ge, -agg_const, {});
      }
    }

    if (prox_ && prox_->rho > 0.0) emit_prox();
    return std::move(model_);
  }

 private:
  int add_var(double lb, double ub, double obj, std::string name, bool binary) {
    int v = model_.lp.add_var(lb, ub, obj);
    model_.is_binary.push_back(binary ? 1 : 0);
    model_.var_names.push_back(std::move(name));
    return v;
  }

  void add_row(std::vector<std::pair<int, double>> coef, RowSense sense, double rhs,
               MilpModel::RowPolish polish) {
    model_.lp.add_row(std::move(coef), sense, rhs);
    model_.row_polish.push_back(polish);
  }

  double residual_cap() const {
    double worst = 1.0;
    for (std::size_t b = 1; b < p_.num_blocks(); ++b) {
      const EpsExpr& e = p_.block(b);
      auto [lo, hi] = affine_range(e.linear, p_.domain);
      double low = lo;
      for (const auto& t : e.terms) low += std::min(t.coeff, 0.0);
      worst = std::max(worst, -low);
    }
    return worst + 10.0;
  }

  // Appends the rows realizing "inner relates to its threshold when the
  // controlling binary is 1" and the term's aggregate contribution.
  void encode_term(std::size_t block, std::size_t term, const EpsTerm& t, TermState st,
                   std::vector<std::pair<int, double>>& agg, double& agg_const) {
    bool positive = t.coeff > 0;
    if ((positive && t.kind != EpsKind::closed_at_zero) ||
        (!positive && t.kind != EpsKind::open_at_minus_eps))
      throw std::invalid_argument("build ip: term sign does not match its resolved kind");

    if (st == TermState::fixed_zero) {
      if (!positive) agg_const += t.coeff;  // indicator stays 1, value psi
      return;
    }

    std::string suffix = std::to_string(block) + "_" + std::to_string(term);
    int zvar = -1;
    if (st == TermState::free_binary) {
      zvar = add_var(0.0, 1.0, 0.0, "z" + suffix, true);
      model_.z_index[block][term] = zvar;
      double w = std::abs(t.coeff);
      if (block == 0)
        model_.lp.obj[static_cast<std::size_t>(zvar)] += w;
      else
        agg.emplace_back(zvar, w);
      if (!positive) agg_const -= w;
    } else {  // fixed_one
      if (positive) agg_const += t.coeff;
    }

    const PAFunction& f = t.inner;
    if (positive)
      encode_lower_rows(f, 0.0, zvar, st, block, term);
    else
      encode_upper_rows(f, -p_.eps, zvar, st, block, term);
  }

  // Rows enforcing f(x) >= target when active: conjunctive over the min part,
  // one-hot selection over the max part when it has several pieces.
  void encode_lower_rows(const PAFunction& f, double target, int zvar, TermState st,
                         std::size_t block, std::size_t term) {
    std::string suffix = std::to_string(block) + "_" + std::to_string(term);
    int uvar = -1;
    if (f.cve.size() > 1) {
      auto [lo, hi] = min_part_range(f, p_.domain);
      uvar = add_var(lo - 1.0, hi + 1.0, 0.0, "u" + suffix, false);
      model_.aux.push_back({'u', uvar, static_cast<int>(block), static_cast<int>(term), 0});
      for (const auto& piece : f.cve) {
        std::vector<std::pair<int, double>> coef{{uvar, 1.0}};
        for (std::size_t j = 0; j < piece.coef.size(); ++j)
          if (piece.coef[j] != 0.0) coef.emplace_back(static_cast<int>(j), -piece.coef[j]);
        add_row(std::move(coef), RowSense::le, piece.offset, {});
      }
    }
    std::vector<int> sel = selection_vars(f.cvx.size(), zvar, st, 'k', block, term);
    for (std::size_t k = 0; k < f.cvx.size(); ++k) {
      const AffineFn& piece = f.cvx[k];
      std::vector<std::pair<int, double>> coef;
      double rhs = target - piece.offset;
      for (std::size_t j = 0; j < piece.coef.size(); ++j)
        if (piece.coef[j] != 0.0) coef.emplace_back(static_cast<int>(j), piece.coef[j]);
      if (uvar >= 0)
        coef.emplace_back(uvar, 1.0);
      else
        rhs -= f.cve.front().offset, append_coef(coef, f.cve.front());
      int ctrl = sel.empty() ? zvar : sel[k];
      MilpModel::RowPolish polish{static_cast<std::int8_t>(ctrl >= 0 ? 2 : 1), ctrl, +1.0};
      if (ctrl >= 0) {
        coef.emplace_back(ctrl, -big_m_);
        rhs -= big_m_;
      }
      add_row(std::move(coef), RowSense::ge, rhs, polish);
    }
  }

  // Rows enforcing f(x) <= target when active: conjunctive over the max part,
  // one-hot selection over the min part when it has several pieces.
  void encode_upper_rows(const PAFunction& f, double target, int zvar, TermState st,
                         std::size_t block, std::size_t term) {
    std::string suffix = std::to_string(block) + "_" + std::to_string(term);
    int vvar = -1;
    if (f.cvx.size() > 1) {
      auto [lo, hi] = max_part_range(f, p_.domain);
      vvar = add_var(lo - 1.0, hi + 1.0, 0.0, "v" + suffix, false);
      model_.aux.push_back({'v', vvar, static_cast<int>(block), static_cast<int>(term), 0});
      for (const auto& piece : f.cvx) {
        std::vector<std::pair<int, double>> coef{{vvar, 1.0}};
        for (std::size_t j = 0; j < piece.coef.size(); ++j)
          if (piece.coef[j] != 0.0) coef.emplace_back(static_cast<int>(j), -piece.coef[j]);
        add_row(std::move(coef), RowSense::ge, piece.offset, {});
      }
    }
    std::vector<int> sel = selection_vars(f.cve.size(), zvar, st, 'l', block, term);
    for (std::size_t l = 0; l < f.cve.size(); ++l) {
      const AffineFn& piece = f.cve[l];
      std::vector<std::pair<int, double>> coef;
      double rhs = target - piece.offset;
      for (std::size_t j = 0; j < piece.coef.size(); ++j)
        if (piece.coef[j] != 0.0) coef.emplace_back(static_cast<int>(j), piece.coef[j]);
      if (vvar >= 0)
        coef.emplace_back(vvar, 1.0);
      else
        rhs -= f.cvx.front().offset, append_coef(coef, f.cvx.front());
      int ctrl = sel.empty() ? zvar : sel[l];
      MilpModel::RowPolish polish{static_cast<std::int8_t>(ctrl >= 0 ? 2 : 1), ctrl, -1.0};
      if (ctrl >= 0) {
        coef.emplace_back(ctrl, big_m_);
        rhs += big_m_;
      }
      add_row(std::move(coef), RowSense::le, rhs, polish);
    }
  }

  // One-hot piece pickers when the enforced side has several pieces.  Their
  // sum equals the indicator binary (or 1 for hard rows).
  std::vector<int> selection_vars(std::size_t pieces, int zvar, TermState st, char side,
                                  std::size_t block, std::size_t term) {
    std::vector<int> sel;
    if (pieces <= 1) return sel;
    std::vector<std::pair<int, double>> sum;
    for (std::size_t i = 0; i < pieces; ++i) {
      std::string name = std::string("sel") + side + std::to_string(block) + "_" +
                         std::to_string(term) + "_" + std::to_string(i);
      int v = add_var(0.0, 1.0, 0.0, std::move(name), true);
      model_.aux.push_back({side, v, static_cast<int>(block), static_cast<int>(term),
                            static_cast<int>(i)});
      sel.push_back(v);
      sum.emplace_back(v, 1.0);
    }
    double rhs = 1.0;
    if (st == TermState::free_binary) {
      sum.emplace_back(zvar, -1.0);
      rhs = 0.0;
    }
    add_row(std::move(sum), RowSense::eq, rhs, {});
    return sel;
  }

  static void append_coef(std::vector<std::pair<int, double>>& coef, const AffineFn& piece) {
    for (std::size_t j = 0; j < piece.coef.size(); ++j) {
      if (piece.coef[j] == 0.0) continue;
      bool merged = false;
      for (auto& [v, c] : coef)
        if (v == static_cast<int>(j)) {
          c += piece.coef[j];
          merged = true;
          break;
        }
      if (!merged) coef.emplace_back(static_cast<int>(j), piece.coef[j]);
    }
  }

  void emit_prox() {
    auto cuts = encode_prox(prox_->center, prox_->rho, p_.domain, prox_->segments);
    for (std::size_t c = 0; c < cuts.size(); ++c) {
      if (cuts[c].empty()) continue;
      double dev = std::max(std::abs(p_.domain.lower[c] - prox_->center[c]),
                            std::abs(p_.domain.upper[c] - prox_->center[c]));
      double qlo = -0.5 * prox_->rho * dev * dev - 1.0;
      int q = add_var(qlo, 0.0, 1.0, "q" + std::to_string(c), false);
      model_.aux.push_back({'q', q, 0, static_cast<int>(c), 0});
      for (const auto& cut : cuts[c]) {
        std::vector<std::pair<int, double>> coef{{q, 1.0}};
        if (cut.slope != 0.0) coef.emplace_back(static_cast<int>(c), -cut.slope);
        add_row(std::move(coef), RowSense::le, cut.offset, {});
      }
    }
  }

  const EpsProblem& p_;
  const IndexPartition& part_;
  double big_m_;
  std::optional<ProxSpec> prox_;
  MilpBuildOptions opts_;
  MilpModel model_;
};

}  // namespace

MilpModel build_direct_ip(const EpsProblem& p, const IndexPartition& part, double big_m,
                          const std::optional<ProxSpec>& prox, const MilpBuildOptions& opts) {
  if (part.state.size() != p.num_blocks())
    throw std::invalid_argument("build ip: partition shape mismatch");
  for (std::size_t b = 0; b < p.num_blocks(); ++b)
    if (part.state[b].size() != p.block(b).terms.size())
      throw std::invalid_argument("build ip: partition shape mismatch");
  IpBuilder builder(p, part, big_m, prox, opts);
  return builder.build();
}

MilpModel build_partial_ip(const DecomposedProblem& dec, const IndexPartition& part, double big_m,
                           const MilpBuildOptions& opts) {
  std::optional<ProxSpec> prox;
  if (opts.include_prox && dec.rho > 0.0)
    prox = ProxSpec{dec.center, dec.rho, opts.prox_segments};
  // Surrogate inners are one-piece on the enforced side, so no selection
  // binaries appear and the model is the plain big-M integer program.
  return build_direct_ip(dec.surrogate, part, big_m, prox, opts);
}

double decoded_indicator(const EpsTerm& term, TermState st, double zval) {
  double z = st == TermState::free_binary ? (zval > 0.5 ? 1.0 : 0.0)
                                          : (st == TermState::fixed_one ? 1.0 : 0.0);
  if (term.kind == EpsKind::closed_at_zero) return z;
  return 1.0 - z;  // open terms: z pins the inner below -eps
}

double decoded_objective(const EpsProblem& p, const IndexPartition& part, const MilpModel& model,
                         const MilpSolution& sol) {
  std::span<const double> x(sol.x.data(), static_cast<std::size_t>(model.num_structural));
  double total = p.objective.linear.value(x);
  const auto& terms = p.objective.terms;
  for (std::size_t t = 0; t < terms.size(); ++t)
    total += terms[t].coeff * decoded_indicator(terms[t], part.at(0, t), sol.z(model, 0, t));
  if (model.prox) total += prox_value(*model.prox, p.domain, x);
  if (model.residual_var >= 0)
    total += model.lp.obj[static_cast<std::size_t>(model.residual_var)] *
             sol.x[static_cast<std::size_t>(model.residual_var)];
  return total;
}

SoundnessReport check_big_m_soundness(const EpsProblem& p, const IndexPartition& part,
                                      const MilpModel& model, const MilpSolution& sol) {
  SoundnessReport report;
  if (!sol.has_solution()) return report;
  std::span<const double> x(sol.x.data(), static_cast<std::size_t>(model.num_structural));
  for (std::size_t b = 0; b < p.num_blocks(); ++b) {
    const auto& terms = p.block(b).terms;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      if (part.at(b, t) != TermState::free_binary) continue;
      const EpsTerm& term = terms[t];
      double inner = term.inner.value(x);
      double linked = term.coeff > 0 ? inner : -inner - p.eps;
      SoundnessIssue issue{static_cast<int>(b), static_cast<int>(t), linked, false, false};
      if (linked < -model.big_m * (1.0 + 1e-9)) issue.below_big_m = true;
      if (sol.z(model, b, t) < 0.5 && linked >= 0.0 && b == 0) issue.profitable_flip = true;
      if (issue.below_big_m || issue.profitable_flip) report.issues.push_back(issue);
    }
  }
  return report;
}

void write_lp_format(const MilpModel& model, std::ostream& os) {
  const LpModel& lp = model.lp;
  auto name = [&](int v) {
    return v < static_cast<int>(model.var_names.size()) ? model.var_names[static_cast<std::size_t>(v)]
                                                        : "v" + std::to_string(v);
  };
  auto write_terms = [&](const std::vector<std::pair<int, double>>& coef) {
    bool first = true;
    for (auto [v, c] : coef) {
      if (c == 0.0) continue;
      if (first) {
        os << (c < 0 ? "- " : "");
      } else {
        os << (c < 0 ? " - " : " + ");
      }
      double a = std::abs(c);
      if (a != 1.0) os << a << " ";
      os << name(v);
      first = false;
    }
    if (first) os << "0 " << name(0);
  };

  if (lp.obj_offset != 0.0) os << "\\ objective offset " << lp.obj_offset << "\n";
  os << "Maximize\n obj: ";
  {
    std::vector<std::pair<int, double>> coef;
    for (int v = 0; v < lp.num_vars(); ++v)
      if (lp.obj[static_cast<std::size_t>(v)] != 0.0)
        coef.emplace_back(v, lp.obj[static_cast<std::size_t>(v)]);
    write_terms(coef);
  }
  os << "\nSubject To\n";
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    os << " r" << i << ": ";
    write_terms(lp.rows[i].coef);
    switch (lp.rows[i].sense) {
      case RowSense::le: os << " <= "; break;
      case RowSense::ge: os << " >= "; break;
      case RowSense::eq: os << " = "; break;
    }
    os << lp.rows[i].rhs << "\n";
  }
  os << "Bounds\n";
  for (int v = 0; v < lp.num_vars(); ++v) {
    double lo = lp.lower[static_cast<std::size_t>(v)], hi = lp.upper[static_cast<std::size_t>(v)];
    if (lo == -kInf && hi == kInf)
      os << " " << name(v) << " free\n";
    else if (lo == -kInf)
      os << " -inf <= " << name(v) << " <= " << hi << "\n";
    else
      os << " " << lo << " <= " << name(v) << " <= " << (hi == kInf ? 1e30 : hi) << "\n";
  }
  bool any_bin = false;
  for (auto b : model.is_binary) any_bin |= b != 0;
  if (any_bin) {
    os << "Binaries\n";
    for (int v = 0; v < lp.num_vars(); ++v)
      if (model.is_binary[static_cast<std::size_t>(v)]) os << " " << name(v);
    os << "\n";
  }
  os << "End\n";
}

}  // namespace hscop
