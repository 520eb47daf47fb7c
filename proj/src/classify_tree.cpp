#include <algorithm>
#include <cmath>
#include <random>

#include "hscop/classify.hpp"

namespace hscop {

namespace {

constexpr double kResidualPenalty = 1e4;

// Branch nodes in heap order; the bits of a leaf id from the top level down
// say whether each ancestor sends it right.
struct TreePaths {
  int depth;
  explicit TreePaths(int d) : depth(d) {}
  int leaves() const { return 1 << depth; }
  int branches() const { return (1 << depth) - 1; }

  // (node, goes_right) along the root-to-leaf path
  std::vector<std::pair<int, bool>> path(int leaf) const {
    std::vector<std::pair<int, bool>> out;
    int node = 0;
    for (int level = depth - 1; level >= 0; --level) {
      bool right = (leaf >> level) & 1;
      out.emplace_back(node, right);
      node = 2 * node + (right ? 2 : 1);
    }
    return out;
  }
};

}  // namespace

int TreeModel::route_leaf(std::span<const double> x) const {
  int node = 0, leaf = 0;
  for (int level = 0; level < depth; ++level) {
    double v = -b[static_cast<std::size_t>(node)];
    for (std::size_t f = 0; f < x.size(); ++f)
      v += a[static_cast<std::size_t>(node)][f] * x[f];
    bool right = v >= 0.0;
    leaf = (leaf << 1) | (right ? 1 : 0);
    node = 2 * node + (right ? 2 : 1);
  }
  return leaf;
}

int TreeModel::predict(std::span<const double> x) const {
  return leaf_label[static_cast<std::size_t>(route_leaf(x))];
}

double tree_route_value(const TreeModel& m, std::span<const double> x, int leaf, double margin,
                        double eps_left) {
  TreePaths paths(m.depth);
  double worst = kInf;
  for (auto [node, right] : paths.path(leaf)) {
    double v = -m.b[static_cast<std::size_t>(node)];
    for (std::size_t f = 0; f < x.size(); ++f)
      v += m.a[static_cast<std::size_t>(node)][f] * x[f];
    double piece = right ? v - margin : -v - margin - eps_left;
    worst = std::min(worst, piece);
  }
  return worst;
}

std::vector<double> flatten_tree(const TreeModel& m) {
  std::size_t p = m.a.empty() ? 0 : m.a.front().size();
  std::vector<double> out(static_cast<std::size_t>(m.num_branch()) * (p + 1), 0.0);
  for (int k = 0; k < m.num_branch(); ++k) {
    for (std::size_t f = 0; f < p; ++f)
      out[static_cast<std::size_t>(k) * p + f] = m.a[static_cast<std::size_t>(k)][f];
    out[static_cast<std::size_t>(m.num_branch()) * p + static_cast<std::size_t>(k)] =
        m.b[static_cast<std::size_t>(k)];
  }
  return out;
}

TreeModel greedy_tree(const Dataset& d, int depth, double tau1, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TreePaths paths(depth);
  TreeModel m;
  m.depth = depth;
  m.a.assign(static_cast<std::size_t>(paths.branches()),
             std::vector<double>(d.features(), 0.0));
  m.b.assign(static_cast<std::size_t>(paths.branches()), 0.0);
  m.leaf_label.assign(static_cast<std::size_t>(paths.leaves()), 0);

  struct Work {
    int node;
    std::vector<int> rows;
  };
  std::vector<Work> queue{{0, {}}};
  queue[0].rows.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) queue[0].rows[i] = static_cast<int>(i);

  auto gini = [&](const std::vector<int>& rows) {
    if (rows.empty()) return 0.0;
    std::vector<int> counts(static_cast<std::size_t>(d.num_classes), 0);
    for (int r : rows) ++counts[static_cast<std::size_t>(d.y[static_cast<std::size_t>(r)])];
    double g = 1.0;
    for (int c : counts) {
      double q = static_cast<double>(c) / rows.size();
      g -= q * q;
    }
    return g;
  };

  std::vector<std::vector<int>> node_rows(static_cast<std::size_t>(paths.branches() + paths.leaves()));
  while (!queue.empty()) {
    Work w = std::move(queue.back());
    queue.pop_back();
    int best_f = 0;
    double best_thr = 0.0, best_score = kInf;
    for (std::size_t f = 0; f < d.features(); ++f) {
      std::vector<double> vals;
      for (int r : w.rows) vals.push_back(d.X[static_cast<std::size_t>(r)][f]);
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        double thr = 0.5 * (vals[i] + vals[i + 1]);
        std::vector<int> left, right;
        for (int r : w.rows)
          (d.X[static_cast<std::size_t>(r)][f] >= thr ? right : left).push_back(r);
        double score = (gini(left) * left.size() + gini(right) * right.size()) /
                       std::max<std::size_t>(w.rows.size(), 1);
        if (score < best_score) {
          best_score = score;
          best_f = static_cast<int>(f);
          best_thr = thr;
        }
      }
    }
    if (best_score == kInf) {
      // degenerate node: random axis, middle split
      std::uniform_int_distribution<int> pick(0, static_cast<int>(d.features()) - 1);
      best_f = pick(rng);
      best_thr = w.rows.empty() ? 0.0 : d.X[static_cast<std::size_t>(w.rows[0])][static_cast<std::size_t>(best_f)];
    }
    // scale into the l1 budget; large coefficients sharpen the margins
    double scale = tau1 / std::max(1.0, std::abs(best_thr));
    m.a[static_cast<std::size_t>(w.node)].assign(d.features(), 0.0);
    m.a[static_cast<std::size_t>(w.node)][static_cast<std::size_t>(best_f)] = scale;
    m.b[static_cast<std::size_t>(w.node)] = scale * best_thr;

    std::vector<int> left, right;
    for (int r : w.rows)
      (d.X[static_cast<std::size_t>(r)][static_cast<std::size_t>(best_f)] >= best_thr ? right
                                                                                      : left)
          .push_back(r);
    int lchild = 2 * w.node + 1, rchild = 2 * w.node + 2;
    if (lchild < paths.branches()) {
      queue.push_back({lchild, left});
      queue.push_back({rchild, right});
    } else {
      node_rows[static_cast<std::size_t>(lchild)] = left;
      node_rows[static_cast<std::size_t>(rchild)] = right;
    }
  }

  for (int leaf = 0; leaf < paths.leaves(); ++leaf) {
    // leaf node ids in heap order start at branches()
    int heap_id = paths.branches() + leaf;
    const auto& rows = node_rows[static_cast<std::size_t>(heap_id)];
    std::vector<int> counts(static_cast<std::size_t>(d.num_classes), 0);
    for (int r : rows) ++counts[static_cast<std::size_t>(d.y[static_cast<std::size_t>(r)])];
    int label = 0;
    for (int c = 1; c < d.num_classes; ++c)
      if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(label)]) label = c;
    m.leaf_label[static_cast<std::size_t>(leaf)] = label;
  }
  return m;
}

namespace {

struct TreeBuilder {
  const Dataset& d;
  const TreeProblemOptions& opts;
  const std::vector<int>* selection;
  const std::vector<std::int8_t>*xi_fix, *zp_fix, *zm_fix;
  const std::vector<double>* prox_center;
  TreePaths paths;
  TreeIpSpec spec;
  int N, p, J, T, B;
  double m_route = 0.0;

  TreeBuilder(const Dataset& dd, const TreeProblemOptions& oo, const std::vector<int>* sel,
              const std::vector<std::int8_t>* xf, const std::vector<std::int8_t>* zpf,
              const std::vector<std::int8_t>* zmf, const std::vector<double>* prox)
      : d(dd),
        opts(oo),
        selection(sel),
        xi_fix(xf),
        zp_fix(zpf),
        zm_fix(zmf),
        prox_center(prox),
        paths(oo.depth) {
    N = static_cast<int>(d.size());
    p = static_cast<int>(d.features());
    J = d.num_classes;
    T = paths.leaves();
    B = paths.branches();
  }

  int add_var(double lo, double hi, double obj, std::string name, bool binary) {
    int v = spec.model.lp.add_var(lo, hi, obj);
    spec.model.is_binary.push_back(binary ? 1 : 0);
    spec.model.var_names.push_back(std::move(name));
    return v;
  }

  void add_row(std::vector<std::pair<int, double>> coef, RowSense sense, double rhs,
               MilpModel::RowPolish polish = {}) {
    spec.model.lp.add_row(std::move(coef), sense, rhs);
    spec.model.row_polish.push_back(polish);
  }

  // affine pieces along the path to a leaf: right nodes give a.x - b, left
  // nodes -(a.x) + b + left_shift
  void path_piece_coef(int node, bool right, int s, std::vector<std::pair<int, double>>& coef,
                       double& offset) const {
    double sign = right ? 1.0 : -1.0;
    for (int f = 0; f < p; ++f) {
      double c = sign * d.X[static_cast<std::size_t>(s)][static_cast<std::size_t>(f)];
      if (c != 0.0) coef.emplace_back(spec.var_a0 + node * p + f, c);
    }
    coef.emplace_back(spec.var_b0 + node, -sign);
    offset = 0.0;
  }

  std::int8_t fix_of(const std::vector<std::int8_t>* v, int s, int t) const {
    return v ? (*v)[static_cast<std::size_t>(s * T + t)] : std::int8_t{-1};
  }

  TreeIpSpec build() {
    spec.opts = opts;
    spec.N = N;
    spec.p = p;
    spec.J = J;

    double x1max = 0.0, xinf = 0.0;
    for (const auto& row : d.X) {
      double s1 = 0.0;
      for (double v : row) {
        s1 += std::abs(v);
        xinf = std::max(xinf, std::abs(v));
      }
      x1max = std::max(x1max, s1);
    }
    m_route = std::max(1.05 * (opts.tau1 * (x1max + 1.0) + 1.0 + opts.eps),
                       20.0 * xinf + 120.0);
    spec.model.big_m = m_route;
    spec.model.eps = opts.eps;

    spec.var_a0 = 0;
    for (int k = 0; k < B; ++k)
      for (int f = 0; f < p; ++f)
        add_var(-opts.tau1, opts.tau1, 0.0, "a" + std::to_string(k) + "_" + std::to_string(f),
                false);
    spec.var_b0 = B * p;
    for (int k = 0; k < B; ++k)
      add_var(-opts.tau1, opts.tau1, 0.0, "b" + std::to_string(k), false);
    spec.model.num_structural = B * (p + 1);

    // l1 budget splits
    int split_plus = spec.model.lp.num_vars();
    for (int k = 0; k < B; ++k)
      for (int f = 0; f < p; ++f)
        add_var(0.0, opts.tau1, 0.0, "ap" + std::to_string(k) + "_" + std::to_string(f), false);
    int split_minus = spec.model.lp.num_vars();
    for (int k = 0; k < B; ++k)
      for (int f = 0; f < p; ++f)
        add_var(0.0, opts.tau1, 0.0, "am" + std::to_string(k) + "_" + std::to_string(f), false);
    for (int k = 0; k < B; ++k) {
      std::vector<std::pair<int, double>> budget;
      for (int f = 0; f < p; ++f) {
        budget.emplace_back(split_plus + k * p + f, 1.0);
        budget.emplace_back(split_minus + k * p + f, 1.0);
        add_row({{spec.var_a0 + k * p + f, 1.0},
                 {split_plus + k * p + f, -1.0},
                 {split_minus + k * p + f, 1.0}},
                RowSense::eq, 0.0);
      }
      add_row(std::move(budget), RowSense::le, opts.tau1);
    }

    // l0 sparsity through per-feature indicator binaries
    int tau0 = opts.tau0;
    if (tau0 < 0 && p > 5) tau0 = (p + 1) / 2;
    if (tau0 >= 0 && tau0 < p) {
      for (int k = 0; k < B; ++k) {
        std::vector<std::pair<int, double>> count;
        for (int f = 0; f < p; ++f) {
          int w = add_var(0.0, 1.0, 0.0,
                          "l0_" + std::to_string(k) + "_" + std::to_string(f), true);
          add_row({{spec.var_a0 + k * p + f, 1.0}, {w, -opts.tau1}}, RowSense::le, 0.0);
          add_row({{spec.var_a0 + k * p + f, -1.0}, {w, -opts.tau1}}, RowSense::le, 0.0);
          count.emplace_back(w, 1.0);
        }
        add_row(std::move(count), RowSense::le, static_cast<double>(tau0));
      }
    }

    // routing binaries and their margin rows
    spec.xi_var.assign(static_cast<std::size_t>(N * T), -1);
    spec.xi_fix.assign(static_cast<std::size_t>(N * T), -1);
    for (int s = 0; s < N; ++s)
      for (int t = 0; t < T; ++t) {
        std::int8_t fixed = fix_of(xi_fix, s, t);
        spec.xi_fix[static_cast<std::size_t>(s * T + t)] = fixed;
        if (fixed == 0) continue;
        int var = -1;
        if (fixed < 0) {
          var = add_var(0.0, 1.0, 0.0, "xi" + std::to_string(s) + "_" + std::to_string(t), true);
          spec.xi_var[static_cast<std::size_t>(s * T + t)] = var;
        }
        for (auto [node, right] : paths.path(t)) {
          std::vector<std::pair<int, double>> coef;
          double off;
          path_piece_coef(node, right, s, coef, off);
          double rhs = 1.0;  // margin
          MilpModel::RowPolish polish{1, -1, +1.0};
          if (var >= 0) {
            coef.emplace_back(var, -m_route);
            rhs -= m_route;
            polish = {2, var, +1.0};
          }
          add_row(std::move(coef), RowSense::ge, rhs, polish);
        }
      }

    // leaf labels
    spec.c_var.assign(static_cast<std::size_t>(J * T), -1);
    for (int j = 0; j < J; ++j)
      for (int t = 0; t < T; ++t)
        spec.c_var[static_cast<std::size_t>(j * T + t)] =
            add_var(0.0, 1.0, 0.0, "c" + std::to_string(j) + "_" + std::to_string(t), true);
    for (int t = 0; t < T; ++t) {
      std::vector<std::pair<int, double>> onehot;
      for (int j = 0; j < J; ++j)
        onehot.emplace_back(spec.c_var[static_cast<std::size_t>(j * T + t)], 1.0);
      add_row(std::move(onehot), RowSense::eq, 1.0);
    }

    // leaf scores
    double m_count = static_cast<double>(N);
    std::vector<int> lvar(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
      lvar[static_cast<std::size_t>(t)] =
          add_var(0.0, m_count, 1.0 / N, "L" + std::to_string(t), false);
      for (int j = 0; j < J; ++j) {
        std::vector<std::pair<int, double>> coef{{lvar[static_cast<std::size_t>(t)], 1.0}};
        double rhs = m_count;
        for (int s = 0; s < N; ++s) {
          if (d.y[static_cast<std::size_t>(s)] != j) continue;
          std::int8_t fixed = spec.xi_fix[static_cast<std::size_t>(s * T + t)];
          if (fixed == 1)
            rhs += 1.0;
          else if (fixed < 0)
            coef.emplace_back(spec.xi_var[static_cast<std::size_t>(s * T + t)], -1.0);
        }
        coef.emplace_back(spec.c_var[static_cast<std::size_t>(j * T + t)], m_count);
        add_row(std::move(coef), RowSense::le, rhs);
      }
    }

    if (!opts.precision_floors.empty()) build_precision(m_count);

    if (prox_center && opts.rho > 0.0) {
      Box ab_box;
      ab_box.lower.assign(static_cast<std::size_t>(B * (p + 1)), -opts.tau1);
      ab_box.upper.assign(static_cast<std::size_t>(B * (p + 1)), opts.tau1);
      auto cuts = encode_prox(*prox_center, opts.rho, ab_box, opts.prox_segments);
      spec.model.prox = ProxSpec{*prox_center, opts.rho, opts.prox_segments};
      for (std::size_t c = 0; c < cuts.size(); ++c) {
        double dev = 2.0 * opts.tau1;
        int q = add_var(-0.5 * opts.rho * dev * dev - 1.0, 0.0, 1.0, "q" + std::to_string(c),
                        false);
        for (const auto& cut : cuts[c]) {
          std::vector<std::pair<int, double>> coef{{q, 1.0}};
          if (cut.slope != 0.0) coef.emplace_back(static_cast<int>(c), -cut.slope);
          add_row(std::move(coef), RowSense::le, cut.offset);
        }
      }
    }
    return std::move(spec);
  }

  void build_precision(double m_count) {
    // counting binaries shared by all constrained classes
    spec.zp_var.assign(static_cast<std::size_t>(N * T), -1);
    spec.zp_fix.assign(static_cast<std::size_t>(N * T), -1);
    spec.zm_var.assign(static_cast<std::size_t>(N * T), -1);
    spec.zm_fix.assign(static_cast<std::size_t>(N * T), -1);

    for (int s = 0; s < N; ++s)
      for (int t = 0; t < T; ++t) {
        std::size_t st = static_cast<std::size_t>(s * T + t);
        // lower counting bit: routed with the strict left shift
        std::int8_t fixed = fix_of(zp_fix, s, t);
        spec.zp_fix[st] = fixed;
        if (fixed >= 0 && fixed == 0) {
          // nothing to emit
        } else {
          int var = -1;
          if (fixed < 0) {
            var = add_var(0.0, 1.0, 0.0, "zp" + std::to_string(s) + "_" + std::to_string(t),
                          true);
            spec.zp_var[st] = var;
          }
          for (auto [node, right] : paths.path(t)) {
            std::vector<std::pair<int, double>> coef;
            double off;
            path_piece_coef(node, right, s, coef, off);
            double rhs = right ? 0.0 : opts.eps;
            MilpModel::RowPolish polish{1, -1, +1.0};
            if (var >= 0) {
              coef.emplace_back(var, -m_route);
              rhs -= m_route;
              polish = {2, var, +1.0};
            }
            add_row(std::move(coef), RowSense::ge, rhs, polish);
          }
        }

        // upper counting bit: zm = 0 certifies the sample avoids the leaf
        fixed = fix_of(zm_fix, s, t);
        spec.zm_fix[st] = fixed;
        if (fixed == 1) continue;  // counted, no rows
        int var = -1;
        if (fixed < 0) {
          var = add_var(0.0, 1.0, 0.0, "zm" + std::to_string(s) + "_" + std::to_string(t), true);
          spec.zm_var[st] = var;
        }
        auto exclusion_rows = [&](int piece_ctrl, int piece_idx) {
          int i = 0;
          for (auto [node, right] : paths.path(t)) {
            if (piece_idx >= 0 && i++ != piece_idx) continue;
            std::vector<std::pair<int, double>> coef;
            double off;
            path_piece_coef(node, right, s, coef, off);
            double rhs = right ? -opts.eps : 0.0;  // piece <= -eps (left side carries its shift)
            MilpModel::RowPolish polish{1, -1, -1.0};
            if (var >= 0) {
              coef.emplace_back(var, -m_route);
              polish = {3, var, -1.0};
            }
            if (piece_ctrl >= 0) {
              coef.emplace_back(piece_ctrl, m_route);
              rhs += m_route;
            }
            add_row(std::move(coef), RowSense::le, rhs, polish);
          }
        };
        if (selection) {
          exclusion_rows(-1, (*selection)[st]);
        } else {
          std::vector<std::pair<int, double>> onehot;
          for (int i = 0; i < opts.depth; ++i) {
            int pick = add_var(0.0, 1.0, 0.0,
                               "pick" + std::to_string(s) + "_" + std::to_string(t) + "_" +
                                   std::to_string(i),
                               true);
            onehot.emplace_back(pick, 1.0);
            int idx = 0;
            for (auto [node, right] : paths.path(t)) {
              if (idx++ != i) continue;
              std::vector<std::pair<int, double>> coef;
              double off;
              path_piece_coef(node, right, s, coef, off);
              double rhs = (right ? -opts.eps : 0.0) + m_route;
              coef.emplace_back(pick, m_route);
              MilpModel::RowPolish polish{1, -1, -1.0};
              if (var >= 0) {
                coef.emplace_back(var, -m_route);
                polish = {3, var, -1.0};
              }
              add_row(std::move(coef), RowSense::le, rhs, polish);
            }
          }
          add_row(std::move(onehot), RowSense::eq, 1.0);
        }
      }

    // residual keeps the early subproblems feasible while precision is
    // unreachable; a zero value certifies the constraint
    spec.model.residual_var =
        add_var(0.0, static_cast<double>(N) + 10.0, -kResidualPenalty, "gamma", false);

    for (auto [j, beta] : opts.precision_floors) {
      if (j < 0 || j >= J) throw std::invalid_argument("tree: bad precision class");
      std::vector<std::pair<int, double>> precision{{spec.model.residual_var, 1.0}};
      std::vector<std::pair<int, double>> nonempty{{spec.model.residual_var, 1.0}};
      double prhs = 0.0, nrhs = 1.0;
      for (int t = 0; t < T; ++t) {
        int cvar = spec.c_var[static_cast<std::size_t>(j * T + t)];
        int eta = add_var(0.0, m_count, 0.0, "eta" + std::to_string(j) + "_" + std::to_string(t),
                          false);
        int zeta = add_var(0.0, m_count, 0.0,
                           "zeta" + std::to_string(j) + "_" + std::to_string(t), false);
        precision.emplace_back(eta, 1.0);
        precision.emplace_back(zeta, -beta);
        nonempty.emplace_back(eta, 1.0);

        add_row({{eta, 1.0}, {cvar, -m_count}}, RowSense::le, 0.0);
        {
          std::vector<std::pair<int, double>> coef{{eta, 1.0}, {cvar, m_count}};
          double rhs = m_count;
          for (int s = 0; s < N; ++s) {
            if (d.y[static_cast<std::size_t>(s)] != j) continue;
            std::size_t st = static_cast<std::size_t>(s * T + t);
            if (spec.zp_fix[st] == 1)
              rhs += 1.0;
            else if (spec.zp_fix[st] < 0)
              coef.emplace_back(spec.zp_var[st], -1.0);
          }
          add_row(std::move(coef), RowSense::le, rhs);
        }
        {
          std::vector<std::pair<int, double>> coef{{zeta, 1.0}, {cvar, -m_count}};
          double rhs = -m_count;
          for (int s = 0; s < N; ++s) {
            std::size_t st = static_cast<std::size_t>(s * T + t);
            if (spec.zm_fix[st] == 1)
              rhs += 1.0;
            else if (spec.zm_fix[st] < 0)
              coef.emplace_back(spec.zm_var[st], -1.0);
          }
          add_row(std::move(coef), RowSense::ge, rhs);
        }
      }
      add_row(std::move(precision), RowSense::ge, prhs);
      add_row(std::move(nonempty), RowSense::ge, nrhs);
    }
  }
};

}  // namespace

TreeIpSpec build_tree_problem(const Dataset& d, const TreeProblemOptions& opts,
                              const std::vector<int>* selection,
                              const std::vector<std::int8_t>* xi_fix,
                              const std::vector<std::int8_t>* zp_fix,
                              const std::vector<std::int8_t>* zm_fix,
                              const std::vector<double>* prox_center) {
  d.validate();
  if (opts.depth < 1) throw std::invalid_argument("tree: depth must be >= 1");
  if (opts.tau0 > static_cast<int>(d.features()))
    throw std::invalid_argument("tree: sparsity budget exceeds the feature count");
  if (!(opts.eps > 0.0)) throw std::invalid_argument("tree: eps must be positive");
  TreeBuilder builder(d, opts, selection, xi_fix, zp_fix, zm_fix, prox_center);
  return builder.build();
}

TreeModel TreeIpSpec::decode(std::span<const double> x) const {
  TreePaths paths(opts.depth);
  TreeModel m;
  m.depth = opts.depth;
  m.a.assign(static_cast<std::size_t>(paths.branches()),
             std::vector<double>(static_cast<std::size_t>(p), 0.0));
  m.b.assign(static_cast<std::size_t>(paths.branches()), 0.0);
  m.leaf_label.assign(static_cast<std::size_t>(paths.leaves()), 0);
  for (int k = 0; k < paths.branches(); ++k) {
    for (int f = 0; f < p; ++f)
      m.a[static_cast<std::size_t>(k)][static_cast<std::size_t>(f)] =
          x[static_cast<std::size_t>(var_a0 + k * p + f)];
    m.b[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(var_b0 + k)];
  }
  for (int t = 0; t < paths.leaves(); ++t) {
    int best = 0;
    double best_val = -kInf;
    for (int j = 0; j < J; ++j) {
      double v = x[static_cast<std::size_t>(c_var[static_cast<std::size_t>(j * paths.leaves() + t)])];
      if (v > best_val) {
        best_val = v;
        best = j;
      }
    }
    m.leaf_label[static_cast<std::size_t>(t)] = best;
  }
  return m;
}

namespace {

std::vector<double> lift_tree_model(const TreeIpSpec& spec, const Dataset& d,
                                    const TreeModel& tree) {
  const MilpModel& model = spec.model;
  std::vector<double> x(static_cast<std::size_t>(model.lp.num_vars()), 0.0);
  TreePaths paths(spec.opts.depth);
  int B = paths.branches(), p = spec.p, N = spec.N;

  for (int k = 0; k < B; ++k) {
    for (int f = 0; f < p; ++f)
      x[static_cast<std::size_t>(spec.var_a0 + k * p + f)] =
          tree.a[static_cast<std::size_t>(k)][static_cast<std::size_t>(f)];
    x[static_cast<std::size_t>(spec.var_b0 + k)] = tree.b[static_cast<std::size_t>(k)];
  }

  // every remaining column is reconstructed from its name
  for (int v = spec.model.num_structural; v < model.lp.num_vars(); ++v) {
    const std::string& name = model.var_names[static_cast<std::size_t>(v)];
    auto two_idx = [&](std::size_t pos, int& i1, int& i2) {
      std::size_t us = name.find('_', pos);
      i1 = std::stoi(name.substr(pos, us - pos));
      i2 = std::stoi(name.substr(us + 1));
    };
    if (name.rfind("ap", 0) == 0) {
      int k, f;
      two_idx(2, k, f);
      x[static_cast<std::size_t>(v)] =
          std::max(0.0, tree.a[static_cast<std::size_t>(k)][static_cast<std::size_t>(f)]);
    } else if (name.rfind("am", 0) == 0) {
      int k, f;
      two_idx(2, k, f);
      x[static_cast<std::size_t>(v)] =
          std::max(0.0, -tree.a[static_cast<std::size_t>(k)][static_cast<std::size_t>(f)]);
    } else if (name.rfind("l0_", 0) == 0) {
      int k, f;
      two_idx(3, k, f);
      x[static_cast<std::size_t>(v)] =
          tree.a[static_cast<std::size_t>(k)][static_cast<std::size_t>(f)] != 0.0 ? 1.0 : 0.0;
    } else if (name.rfind("xi", 0) == 0) {
      int s, t;
      two_idx(2, s, t);
      x[static_cast<std::size_t>(v)] =
          tree_route_value(tree, d.X[static_cast<std::size_t>(s)], t, 1.0, 0.0) >= 0.0 ? 1.0
                                                                                       : 0.0;
    } else if (name.rfind("zp", 0) == 0) {
      int s, t;
      two_idx(2, s, t);
      x[static_cast<std::size_t>(v)] =
          tree_route_value(tree, d.X[static_cast<std::size_t>(s)], t, 0.0, spec.opts.eps) >= 0.0
              ? 1.0
              : 0.0;
    } else if (name.rfind("zm", 0) == 0) {
      int s, t;
      two_idx(2, s, t);
      x[static_cast<std::size_t>(v)] =
          tree_route_value(tree, d.X[static_cast<std::size_t>(s)], t, 0.0, spec.opts.eps) >
                  -spec.opts.eps
              ? 1.0
              : 0.0;
    } else if (name.rfind("pick", 0) == 0) {
      // one-hot argmin over the exclusion pieces
      std::size_t us1 = name.find('_', 4);
      std::size_t us2 = name.find('_', us1 + 1);
      int s = std::stoi(name.substr(4, us1 - 4));
      int t = std::stoi(name.substr(us1 + 1, us2 - us1 - 1));
      int i = std::stoi(name.substr(us2 + 1));
      int best = 0, idx = 0;
      double best_v = kInf;
      for (auto [node, right] : paths.path(t)) {
        double piece = -tree.b[static_cast<std::size_t>(node)];
        for (int f = 0; f < p; ++f)
          piece += tree.a[static_cast<std::size_t>(node)][static_cast<std::size_t>(f)] *
                   d.X[static_cast<std::size_t>(s)][static_cast<std::size_t>(f)];
        if (!right) piece = -piece - spec.opts.eps;
        if (piece < best_v) {
          best_v = piece;
          best = idx;
        }
        ++idx;
      }
      x[static_cast<std::size_t>(v)] = best == i ? 1.0 : 0.0;
    } else if (name.rfind("c", 0) == 0 && name.size() > 1 && std::isdigit(name[1])) {
      int j, t;
      two_idx(1, j, t);
      x[static_cast<std::size_t>(v)] =
          tree.leaf_label[static_cast<std::size_t>(t)] == j ? 1.0 : 0.0;
    } else if (name.rfind("L", 0) == 0 && name.size() > 1 && std::isdigit(name[1])) {
      int t = std::stoi(name.substr(1));
      int count = 0;
      for (int s = 0; s < N; ++s)
        if (d.y[static_cast<std::size_t>(s)] == tree.leaf_label[static_cast<std::size_t>(t)] &&
            tree_route_value(tree, d.X[static_cast<std::size_t>(s)], t, 1.0, 0.0) >= 0.0)
          ++count;
      x[static_cast<std::size_t>(v)] = count;
    } else if (name.rfind("eta", 0) == 0) {
      int j, t;
      two_idx(3, j, t);
      if (tree.leaf_label[static_cast<std::size_t>(t)] != j) continue;
      int count = 0;
      for (int s = 0; s < N; ++s)
        if (d.y[static_cast<std::size_t>(s)] == j &&
            tree_route_value(tree, d.X[static_cast<std::size_t>(s)], t, 0.0, spec.opts.eps) >=
                0.0)
          ++count;
      x[static_cast<std::size_t>(v)] = count;
    } else if (name.rfind("zeta", 0) == 0) {
      int j, t;
      two_idx(4, j, t);
      if (tree.leaf_label[static_cast<std::size_t>(t)] != j) continue;
      int count = 0;
      for (int s = 0; s < N; ++s)
        if (tree_route_value(tree, d.X[static_cast<std::size_t>(s)], t, 0.0, spec.opts.eps) >
            -spec.opts.eps)
          ++count;
      x[static_cast<std::size_t>(v)] = count;
    } else if (name.rfind("q", 0) == 0 && model.prox) {
      int c = std::stoi(name.substr(1));
      Box ab_box;
      ab_box.lower.assign(static_cast<std::size_t>(spec.model.num_structural), -spec.opts.tau1);
      ab_box.upper.assign(static_cast<std::size_t>(spec.model.num_structural), spec.opts.tau1);
      auto cuts = encode_prox(model.prox->center, model.prox->rho, ab_box,
                              model.prox->segments);
      double q = 0.0;
      for (const auto& cut : cuts[static_cast<std::size_t>(c)])
        q = std::min(q, cut.slope * x[static_cast<std::size_t>(c)] + cut.offset);
      x[static_cast<std::size_t>(v)] = q;
    }
  }

  // residual: smallest slack that satisfies the precision rows
  if (spec.model.residual_var >= 0) {
    double gamma = 0.0;
    const auto& rows = model.lp.rows;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      bool has_gamma = false;
      double sum = 0.0;
      for (auto [var, c] : rows[r].coef) {
        if (var == spec.model.residual_var) {
          has_gamma = true;
          continue;
        }
        sum += c * x[static_cast<std::size_t>(var)];
      }
      if (has_gamma && rows[r].sense == RowSense::ge)
        gamma = std::max(gamma, rows[r].rhs - sum);
    }
    x[static_cast<std::size_t>(spec.model.residual_var)] = gamma;
  }
  return x;
}

}  // namespace

std::vector<double> lift_tree_point(const TreeIpSpec& spec, const Dataset& d,
                                    const TreeModel& tree) {
  return lift_tree_model(spec, d, tree);
}

bool tree_bits_consistent(const TreeIpSpec& spec, const Dataset& d,
                          std::span<const double> full_x) {
  if (!milp_point_feasible(spec.model, full_x, 1e-5)) return false;
  TreeModel tree = spec.decode(full_x);
  TreePaths paths(spec.opts.depth);
  int T = paths.leaves();
  for (int s = 0; s < spec.N; ++s)
    for (int t = 0; t < T; ++t) {
      std::size_t st = static_cast<std::size_t>(s * T + t);
      bool margin_bit =
          tree_route_value(tree, d.X[static_cast<std::size_t>(s)], t, 1.0, 0.0) >= 0.0;
      if (spec.xi_fix[st] == 1 && !margin_bit) return false;
      if (spec.xi_var[st] >= 0 &&
          std::abs(full_x[static_cast<std::size_t>(spec.xi_var[st])] - (margin_bit ? 1.0 : 0.0)) >
              1e-6)
        return false;
      if (!spec.zp_fix.empty()) {
        bool lower_bit =
            tree_route_value(tree, d.X[static_cast<std::size_t>(s)], t, 0.0, spec.opts.eps) >=
            0.0;
        bool upper_bit =
            tree_route_value(tree, d.X[static_cast<std::size_t>(s)], t, 0.0, spec.opts.eps) >
            -spec.opts.eps;
        if (spec.zp_fix[st] == 1 && !lower_bit) return false;
        if (spec.zm_fix[st] == 0 && upper_bit) return false;
        if (spec.zp_var[st] >= 0 &&
            std::abs(full_x[static_cast<std::size_t>(spec.zp_var[st])] -
                     (lower_bit ? 1.0 : 0.0)) > 1e-6)
          return false;
        if (spec.zm_var[st] >= 0 &&
            std::abs(full_x[static_cast<std::size_t>(spec.zm_var[st])] -
                     (upper_bit ? 1.0 : 0.0)) > 1e-6)
          return false;
      }
    }
  return true;
}

namespace {

TreeSolveResult finish_tree_solve(TreeIpSpec spec, const Dataset& d, const MilpSolution& sol,
                                  std::vector<double> objective_trace) {
  TreeSolveResult out;
  out.stats = sol.stats;
  out.objective_trace = std::move(objective_trace);
  if (!sol.has_solution()) {
    out.spec = std::move(spec);
    return out;
  }
  TreeModel tree = spec.decode(sol.x);
  // canonical bits from the decoded tree; fall back to the raw solution when
  // the lift violates a row
  std::vector<double> canon = lift_tree_model(spec, d, tree);
  std::vector<double> x = sol.x;
  if (milp_point_feasible(spec.model, canon, 1e-6)) x = std::move(canon);
  double gamma = spec.model.residual_var >= 0
                     ? x[static_cast<std::size_t>(spec.model.residual_var)]
                     : 0.0;
  out.feasible = gamma <= 1e-7;
  out.tree = std::move(tree);
  out.objective = sol.objective;
  out.x = std::move(x);
  out.spec = std::move(spec);
  return out;
}

}  // namespace

TreeSolveResult solve_tree_full_mip(const Dataset& d, const TreeProblemOptions& opts,
                                    const MilpConfig& cfg, std::uint64_t seed) {
  TreeProblemOptions o = opts;
  o.rho = 0.0;
  TreeIpSpec spec = build_tree_problem(d, o);
  TreeModel warm = greedy_tree(d, o.depth, o.tau1, seed);
  MilpConfig run = cfg;
  std::vector<double> lifted = lift_tree_model(spec, d, warm);
  if (milp_point_feasible(spec.model, lifted, 1e-6)) run.warm_x = lifted;
  MilpSolution sol = solve_milp(spec.model, run);
  return finish_tree_solve(std::move(spec), d, sol, {});
}

TreeSolveResult solve_tree_idsa_pip(const Dataset& d, const TreeProblemOptions& opts,
                                    const TreePipConfig& cfg, std::uint64_t seed) {
  TreePaths paths(opts.depth);
  int T = paths.leaves();
  int N = static_cast<int>(d.size());

  TreeModel tree = greedy_tree(d, opts.depth, opts.tau1, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<double> objective_trace;
  TreeSolveResult last;

  int rounds = cfg.nu_max > 0 ? cfg.nu_max : static_cast<int>(cfg.eps_schedule.size());
  std::vector<double> prev_ab = flatten_tree(tree);
  for (int nu = 0; nu < rounds; ++nu) {
    TreeProblemOptions o = opts;
    o.eps = cfg.eps_schedule[static_cast<std::size_t>(
        std::min<std::size_t>(static_cast<std::size_t>(nu), cfg.eps_schedule.size() - 1))];

    // selection: the active exclusion piece per (sample, leaf)
    std::vector<int> selection(static_cast<std::size_t>(N * T), 0);
    for (int s = 0; s < N; ++s)
      for (int t = 0; t < T; ++t) {
        int idx = 0, best = 0;
        double best_v = kInf;
        for (auto [node, right] : paths.path(t)) {
          double piece = -tree.b[static_cast<std::size_t>(node)];
          for (std::size_t f = 0; f < d.features(); ++f)
            piece += tree.a[static_cast<std::size_t>(node)][f] *
                     d.X[static_cast<std::size_t>(s)][f];
          if (!right) piece = -piece - o.eps;
          if (piece < best_v) {
            best_v = piece;
            best = idx;
          }
          ++idx;
        }
        selection[static_cast<std::size_t>(s * T + t)] = best;
      }

    double r = std::clamp(cfg.pip.r0, cfg.pip.r_min, cfg.pip.r_max);
    int mu = 0, mu_tilde = 0;
    double prev_obj = -kInf;
    bool have_prev = false;
    while (mu < cfg.pip.mu_max && mu_tilde < cfg.pip.mu_tilde_max) {
      // quantile fixing per family
      auto fix_family = [&](double margin, double eps_left, bool flip) {
        std::vector<std::int8_t> fix(static_cast<std::size_t>(N * T), -1);
        std::vector<double> above, below;
        std::vector<std::pair<std::size_t, double>> vals;
        std::uniform_int_distribution<int> coin(0, 1);
        for (int s = 0; s < N; ++s)
          for (int t = 0; t < T; ++t) {
            double v = tree_route_value(tree, d.X[static_cast<std::size_t>(s)], t, margin,
                                        eps_left);
            if (flip) v = -v - o.eps;  // exclusion margin for the upper bits
            vals.emplace_back(static_cast<std::size_t>(s * T + t), v);
            if (v > 0)
              above.push_back(v);
            else if (v < 0)
              below.push_back(v);
            else
              (coin(rng) == 0 ? above : below).push_back(v);
          }
        double hi = quantile_threshold(above, r, QuantileSide::lower);
        double lo = quantile_threshold(below, r, QuantileSide::upper);
        for (auto [st, v] : vals) {
          if (v > hi)
            fix[st] = flip ? 0 : 1;  // strong exclusion pins the upper bit to zero
          else if (v < lo)
            fix[st] = flip ? 1 : 0;
        }
        return fix;
      };
      std::vector<std::int8_t> xi_fix = fix_family(1.0, 0.0, false);
      std::vector<std::int8_t> zp_fix, zm_fix;
      if (!opts.precision_floors.empty()) {
        zp_fix = fix_family(0.0, o.eps, false);
        zm_fix = fix_family(0.0, o.eps, true);
      }

      TreeIpSpec spec = build_tree_problem(
          d, o, &selection, &xi_fix, opts.precision_floors.empty() ? nullptr : &zp_fix,
          opts.precision_floors.empty() ? nullptr : &zm_fix,
          o.rho > 0.0 ? &prev_ab : nullptr);
      MilpConfig sub = cfg.pip.subproblem;
      std::vector<double> lifted = lift_tree_model(spec, d, tree);
      if (milp_point_feasible(spec.model, lifted, 1e-6)) sub.warm_x = lifted;
      MilpSolution sol = solve_milp(spec.model, sub);
      if (!sol.has_solution()) break;

      TreeSolveResult step = finish_tree_solve(std::move(spec), d, sol, {});
      objective_trace.push_back(sol.objective);
      last = std::move(step);
      last.stats.nodes += sol.stats.nodes;
      tree = last.tree;

      if (have_prev && std::abs(sol.objective - prev_obj) <= cfg.pip.obj_eq_tol) {
        r = std::min(r + cfg.pip.r_delta, cfg.pip.r_max);
        ++mu_tilde;
      } else if (have_prev) {
        mu_tilde = 0;
      }
      prev_obj = sol.objective;
      have_prev = true;
      ++mu;
    }

    std::vector<double> ab = flatten_tree(tree);
    double step2 = 0.0;
    for (std::size_t i = 0; i < ab.size(); ++i)
      step2 += (ab[i] - prev_ab[i]) * (ab[i] - prev_ab[i]);
    prev_ab = ab;
    if (std::sqrt(step2) <= cfg.step_tol && nu > 0) break;
  }
  last.objective_trace = objective_trace;
  return last;
}

}  // namespace hscop
