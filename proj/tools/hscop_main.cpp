// Command-line front end: solve Heaviside composite programs from JSON,
// train the two classifier families from CSV, and sweep precision floors.

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hscop/classify.hpp"
#include "hscop/json_io.hpp"
#include "hscop/oracle.hpp"

namespace fs = std::filesystem;
using namespace hscop;

namespace {

struct CommonOpts {
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  std::string method = "idsa-pip";
  std::vector<double> eps_schedule = {1e-2, 1e-3, 1e-4, 1e-5};
  double fixed_eps = 1e-5;
  double rho = 1e-3;
  double time_limit = 0.0;  // seconds per subproblem; 0 = off
  bool redact_times = false;
  bool lp_dump = false;
  int oracle_bits = 16;
};

SolveMethod parse_method(const std::string& name) {
  if (name == "full-mip") return SolveMethod::full_mip;
  if (name == "pip") return SolveMethod::pip;
  if (name == "isa-pip") return SolveMethod::isa_pip;
  if (name == "idsa-pip") return SolveMethod::idsa_pip;
  if (name == "oracle") return SolveMethod::oracle;
  throw CLI::ValidationError("--method", "unknown method '" + name + "'");
}

int env_threads() {
  const char* v = std::getenv("HSCOP_THREADS");
  if (!v) return 1;
  int t = std::atoi(v);
  return t > 0 ? t : 1;
}

void apply_env_out_dir(CommonOpts& c) {
  if (const char* v = std::getenv("HSCOP_OUT_DIR"); v && c.out_dir == "out") c.out_dir = v;
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

IdsaConfig make_idsa_config(const CommonOpts& c) {
  IdsaConfig cfg;
  cfg.eps_schedule = c.eps_schedule;
  cfg.rho = c.rho;
  cfg.pip.seed = c.seed;
  if (c.time_limit > 0.0) {
    cfg.pip.subproblem.time_limit_s = c.time_limit;
    cfg.pip.subproblem.stall_time_s = std::max(1.0, 0.1 * c.time_limit);
    cfg.subproblem.time_limit_s = c.time_limit;
    cfg.subproblem.stall_time_s = std::max(1.0, 0.1 * c.time_limit);
  }
  return cfg;
}

// ---- solve ------------------------------------------------------------------

int run_solve(const std::string& problem_path, const CommonOpts& c) {
  HeavisideProblem p = problem_from_json_file(problem_path);
  SolveMethod method = parse_method(c.method);
  IdsaConfig idsa = make_idsa_config(c);

  auto t0 = std::chrono::steady_clock::now();
  std::vector<double> x;
  RunTrace trace;
  bool have_trace = false;

  switch (method) {
    case SolveMethod::oracle: {
      OracleOptions oo;
      oo.max_bits = c.oracle_bits;
      OracleResult r = oracle_solve(p, oo);
      if (r.feasible) x = r.x;
      break;
    }
    case SolveMethod::full_mip: {
      EpsProblem e = make_eps_problem(p, c.fixed_eps);
      IndexPartition part = IndexPartition::all_free(e);
      MilpModel model = build_direct_ip(e, part, compute_big_m(e));
      if (c.lp_dump) {
        std::ostringstream os;
        write_lp_format(model, os);
        write_file(fs::path(c.out_dir) / "model.lp", os.str());
      }
      MilpConfig run;
      if (c.time_limit > 0.0) run.time_limit_s = c.time_limit;
      std::vector<double> x0 = bootstrap_feasible(p, c.fixed_eps, idsa.lambda);
      auto warm = lift_point(e, part, model, x0);
      if (milp_point_feasible(model, warm, 1e-6)) run.warm_x = warm;
      MilpSolution sol = solve_milp(model, run);
      if (sol.has_solution()) x.assign(sol.x.begin(), sol.x.begin() + model.num_structural);
      break;
    }
    case SolveMethod::pip: {
      EpsProblem e = make_eps_problem(p, c.fixed_eps);
      std::vector<double> x0 = bootstrap_feasible(p, c.fixed_eps, idsa.lambda);
      PipProblem prob;
      prob.problem = &e;
      if (idsa.rho > 0.0) prob.prox = ProxSpec{x0, idsa.rho, idsa.prox_segments};
      PipConfig pcfg = idsa.pip;
      PipResult res = pip_solve(prob, x0, pcfg);
      x = res.x;
      fs::create_directories(c.out_dir);
      write_file(fs::path(c.out_dir) / "trace.jsonl",
                 pip_trace_to_json_lines(res.trace, c.redact_times));
      break;
    }
    case SolveMethod::isa_pip:
    case SolveMethod::idsa_pip: {
      idsa.decompose = method == SolveMethod::idsa_pip;
      IdsaResult res = idsa_run(p, idsa);
      x = res.x;
      trace = std::move(res.trace);
      have_trace = true;
      break;
    }
  }
  double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  bool feasible = !x.empty() && check_feasible(p, x);
  double objective = x.empty() ? -kInf : p.objective_value(x);

  fs::create_directories(c.out_dir);
  write_file(fs::path(c.out_dir) / "solution.json",
             solution_to_json(x, objective, feasible, c.method, wall_ms, c.redact_times));
  if (have_trace) {
    write_file(fs::path(c.out_dir) / "trace.jsonl", trace_to_json_lines(trace, c.redact_times));
    write_file(fs::path(c.out_dir) / "verify.json",
               verify_report_to_json(verify_run(trace, p, idsa)));
  }
  std::ostringstream csv;
  csv << "method,feasible,objective,wall_ms\n";
  csv << c.method << "," << (feasible ? 1 : 0) << "," << objective << ","
      << (c.redact_times ? 0.0 : wall_ms) << "\n";
  write_file(fs::path(c.out_dir) / "solve.csv", csv.str());

  if (have_trace && !trace.records.empty()) {
    std::printf("%4s %10s %14s %12s %10s\n", "nu", "eps", "objective", "step", "ms");
    for (const auto& r : trace.records)
      std::printf("%4d %10.2e %14.8f %12.3e %10.1f\n", r.nu, r.eps, r.theta_exit, r.step_norm,
                  c.redact_times ? 0.0 : r.stats.wall_ms);
  }
  std::cout << (feasible ? "feasible" : "infeasible") << " objective=" << objective << "\n";
  return feasible ? 0 : 2;
}

// ---- classify ---------------------------------------------------------------

struct ClassifyOpts {
  std::string dataset_path;
  std::string label_col = "label";
  int folds = 4;
  std::vector<std::string> betas;  // CLASS=VALUE
  double alpha = 0.1;
  double tau = 10.0;
  double margin = 1.0;
  int depth = 0;  // > 0 selects the tree family
  double tau1 = 100.0;
  int tau0 = -1;
};

std::map<int, double> parse_betas(const std::vector<std::string>& list) {
  std::map<int, double> out;
  for (const auto& s : list) {
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--beta", "expected CLASS=VALUE, got '" + s + "'");
    out[std::stoi(s.substr(0, eq))] = std::stod(s.substr(eq + 1));
  }
  return out;
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os << *v;
  return os.str();
}

struct FoldRow {
  int fold;
  bool feasible;
  double objective;
  double wall_ms;
  Metrics train, test;
  int prec_class = -1;
};

FoldRow run_score_fold(const Dataset& train, const Dataset& test, int fold,
                       const CommonOpts& c, const ClassifyOpts& k,
                       const std::map<int, double>& betas) {
  ScoreProblemOptions opts;
  opts.precision_floors = betas;
  opts.tau = k.tau;
  opts.margin = k.margin;
  for (auto [cls, beta] : betas) opts.recall_floors.emplace(cls, k.alpha);
  opts.default_recall_floors = false;
  ScoreProblemSpec spec = build_score_problem(train, opts);

  ScoreSolveConfig cfg;
  cfg.method = parse_method(c.method);
  cfg.idsa = make_idsa_config(c);
  cfg.idsa.selection_mode = IdsaConfig::SelectionMode::single;
  cfg.idsa.pip.subproblem.objective_grid = 0.0;
  cfg.fixed_eps = c.fixed_eps;
  if (c.time_limit > 0.0) cfg.full_mip.time_limit_s = c.time_limit;
  cfg.oracle_bits = c.oracle_bits;
  cfg.seed = c.seed + static_cast<std::uint64_t>(fold) * 1013;

  ScoreOutcome res = solve_score_problem(spec, train, cfg);
  FoldRow row;
  row.fold = fold;
  row.feasible = res.feasible;
  row.objective = res.objective;
  row.wall_ms = res.wall_ms;
  if (!res.x.empty()) {
    row.train = compute_metrics(predict_all(res.model, train), train.y, train.num_classes);
    row.test = compute_metrics(predict_all(res.model, test), test.y, test.num_classes);
  }
  if (!betas.empty()) row.prec_class = betas.begin()->first;
  return row;
}

FoldRow run_tree_fold(const Dataset& train, const Dataset& test, int fold, const CommonOpts& c,
                      const ClassifyOpts& k, const std::map<int, double>& betas) {
  TreeProblemOptions opts;
  opts.depth = k.depth;
  opts.tau1 = k.tau1;
  opts.tau0 = k.tau0;
  opts.precision_floors = betas;
  opts.eps = c.fixed_eps;

  std::uint64_t seed = c.seed + static_cast<std::uint64_t>(fold) * 1013;
  auto t0 = std::chrono::steady_clock::now();
  TreeSolveResult res;
  if (parse_method(c.method) == SolveMethod::full_mip) {
    MilpConfig run;
    if (c.time_limit > 0.0) {
      run.time_limit_s = c.time_limit;
      run.stall_time_s = std::max(1.0, 0.1 * c.time_limit);
    }
    run.objective_grid = 1.0 / static_cast<double>(train.size());
    res = solve_tree_full_mip(train, opts, run, seed);
  } else {
    TreePipConfig cfg;
    cfg.eps_schedule = {1e-1, 1e-2, 1e-3, 1e-4};
    cfg.pip.seed = seed;
    if (c.time_limit > 0.0) {
      cfg.pip.subproblem.time_limit_s = c.time_limit;
      cfg.pip.subproblem.stall_time_s = std::max(1.0, 0.1 * c.time_limit);
    }
    cfg.pip.subproblem.objective_grid = 1.0 / static_cast<double>(train.size());
    res = solve_tree_idsa_pip(train, opts, cfg, seed);
  }
  FoldRow row;
  row.fold = fold;
  row.feasible = res.feasible;
  row.objective = res.objective;
  row.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  if (res.feasible || !res.x.empty()) {
    auto preds = [&](const Dataset& d) {
      std::vector<int> out;
      for (const auto& r : d.X) out.push_back(res.tree.predict(r));
      return out;
    };
    row.train = compute_metrics(preds(train), train.y, train.num_classes);
    row.test = compute_metrics(preds(test), test.y, test.num_classes);
  }
  if (!betas.empty()) row.prec_class = betas.begin()->first;
  return row;
}

std::string rows_to_csv(const std::vector<FoldRow>& rows, const std::string& method,
                        const std::map<int, double>& betas, bool redact_times) {
  std::ostringstream csv;
  csv << "fold,method,beta,obj,time_ms,train_acc,test_acc,train_prec,test_prec\n";
  double beta = betas.empty() ? 0.0 : betas.begin()->second;
  for (const auto& r : rows) {
    csv << r.fold << "," << method << "," << beta << ",";
    if (r.feasible)
      csv << r.objective;
    else
      csv << "infeas.";
    csv << "," << (redact_times ? 0.0 : r.wall_ms) << "," << r.train.accuracy << ","
        << r.test.accuracy << ",";
    if (r.prec_class >= 0 && !r.train.precision.empty()) {
      csv << fmt_opt(r.train.precision[static_cast<std::size_t>(r.prec_class)]) << ","
          << fmt_opt(r.test.precision[static_cast<std::size_t>(r.prec_class)]);
    } else {
      csv << ",";
    }
    csv << "\n";
  }
  return csv.str();
}

int run_classify(const CommonOpts& c, const ClassifyOpts& k) {
  Dataset full = load_csv_file(k.dataset_path, k.label_col);
  auto betas = parse_betas(k.betas);
  auto folds = stratified_folds(full.y, k.folds, c.seed);

  std::vector<std::future<FoldRow>> jobs;
  int threads = env_threads();
  std::vector<FoldRow> rows(static_cast<std::size_t>(k.folds));
  auto run_fold = [&](int f) {
    std::vector<int> test_rows = folds[static_cast<std::size_t>(f)];
    std::vector<int> train_rows;
    for (int g = 0; g < k.folds; ++g)
      if (g != f)
        train_rows.insert(train_rows.end(), folds[static_cast<std::size_t>(g)].begin(),
                          folds[static_cast<std::size_t>(g)].end());
    Dataset train = full.subset(train_rows);
    Dataset test = full.subset(test_rows);
    Standardizer st = Standardizer::fit(train);
    st.apply(train);
    st.apply(test);
    return k.depth > 0 ? run_tree_fold(train, test, f, c, k, betas)
                       : run_score_fold(train, test, f, c, k, betas);
  };
  if (threads <= 1) {
    for (int f = 0; f < k.folds; ++f) rows[static_cast<std::size_t>(f)] = run_fold(f);
  } else {
    for (int f = 0; f < k.folds; ++f)
      jobs.push_back(std::async(std::launch::async, run_fold, f));
    for (int f = 0; f < k.folds; ++f) rows[static_cast<std::size_t>(f)] = jobs[static_cast<std::size_t>(f)].get();
  }

  fs::create_directories(c.out_dir);
  write_file(fs::path(c.out_dir) / "metrics.csv",
             rows_to_csv(rows, c.method, betas, c.redact_times));
  for (const auto& r : rows)
    std::cout << "fold " << r.fold << ": " << (r.feasible ? "ok" : "infeas.")
              << " train_acc=" << r.train.accuracy << " test_acc=" << r.test.accuracy << "\n";
  return 0;
}

// ---- pareto -----------------------------------------------------------------

int run_pareto(const CommonOpts& c, const ClassifyOpts& k, const std::vector<double>& thresholds,
               int beta_class) {
  Dataset full = load_csv_file(k.dataset_path, k.label_col);
  if (beta_class < 0) {
    auto counts = full.class_counts();
    beta_class = 0;
    for (int j = 1; j < full.num_classes; ++j)
      if (counts[static_cast<std::size_t>(j)] > counts[static_cast<std::size_t>(beta_class)])
        beta_class = j;
  }
  auto folds = stratified_folds(full.y, std::max(k.folds, 2), c.seed);
  std::vector<int> test_rows = folds[0];
  std::vector<int> train_rows;
  for (std::size_t g = 1; g < folds.size(); ++g)
    train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
  Dataset train = full.subset(train_rows);
  Dataset test = full.subset(test_rows);
  Standardizer st = Standardizer::fit(train);
  st.apply(train);
  st.apply(test);

  ClassifyOpts kk = k;
  ParetoResult result = pareto_sweep(thresholds, [&](double beta) {
    std::map<int, double> betas{{beta_class, beta}};
    FoldRow row = kk.depth > 0 ? run_tree_fold(train, test, 0, c, kk, betas)
                               : run_score_fold(train, test, 0, c, kk, betas);
    ParetoPoint pt;
    pt.beta = beta;
    pt.feasible = row.feasible;
    pt.objective = row.objective;
    pt.wall_ms = row.wall_ms;
    pt.train = row.train;
    pt.test = row.test;
    if (!row.train.precision.empty()) {
      pt.train_precision = row.train.precision[static_cast<std::size_t>(beta_class)];
      pt.test_precision = row.test.precision[static_cast<std::size_t>(beta_class)];
    }
    return pt;
  });

  std::ostringstream csv;
  csv << "beta,feasible,obj,time_ms,train_acc,train_prec,test_acc,test_prec\n";
  for (const auto& p : result.points)
    csv << p.beta << "," << (p.feasible ? 1 : 0) << "," << p.objective << ","
        << (c.redact_times ? 0.0 : p.wall_ms) << "," << p.train.accuracy << ","
        << fmt_opt(p.train_precision) << "," << p.test.accuracy << ","
        << fmt_opt(p.test_precision) << "\n";
  fs::create_directories(c.out_dir);
  write_file(fs::path(c.out_dir) / "pareto.csv", csv.str());

  std::ostringstream tsv;  // gnuplot-ready: non-dominated training points
  tsv << "# beta\ttrain_acc\ttrain_prec\ttest_acc\ttest_prec\n";
  for (int idx : result.train_front) {
    const auto& p = result.points[static_cast<std::size_t>(idx)];
    tsv << p.beta << "\t" << p.train.accuracy << "\t" << fmt_opt(p.train_precision) << "\t"
        << p.test.accuracy << "\t" << fmt_opt(p.test_precision) << "\n";
  }
  write_file(fs::path(c.out_dir) / "pareto_front.tsv", tsv.str());
  std::cout << result.points.size() << " points, " << result.train_front.size()
            << " on the training front\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solvers for affine Heaviside composite programs and the two "
               "precision-constrained classifiers built on them"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a TOML file; flags override it");

  CommonOpts c;
  ClassifyOpts k;
  std::string problem_path;
  std::vector<double> thresholds;
  int beta_class = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--method", c.method,
                    "full-mip | pip | isa-pip | idsa-pip | oracle");
    cmd->add_option("--eps-schedule", c.eps_schedule, "shrinking widths for the outer loop");
    cmd->add_option("--eps", c.fixed_eps, "width for the fixed-eps baselines");
    cmd->add_option("--rho", c.rho, "proximal weight");
    cmd->add_option("--seed", c.seed, "seed for every stochastic choice");
    cmd->add_option("--time-limit", c.time_limit, "seconds per subproblem");
    cmd->add_option("--oracle-bits", c.oracle_bits, "sign-pattern budget of the oracle");
    cmd->add_option("--out", c.out_dir, "output directory");
    cmd->add_flag("--redact-times", c.redact_times,
                  "zero wall-clock fields for byte-reproducible outputs");
  };

  CLI::App* solve = app.add_subcommand("solve", "solve a problem JSON file");
  solve->add_option("--problem", problem_path, "problem JSON")->required();
  solve->add_flag("--lp-dump", c.lp_dump, "write the integer program in LP format");
  add_common(solve);

  CLI::App* classify = app.add_subcommand("classify", "cross-validated classifier training");
  classify->add_option("--dataset", k.dataset_path, "CSV file")->required();
  classify->add_option("--label-col", k.label_col, "label column name or index");
  classify->add_option("--folds", k.folds, "stratified fold count");
  classify->add_option("--beta", k.betas, "precision floor CLASS=VALUE (repeatable)");
  classify->add_option("--alpha", k.alpha, "recall floor for constrained classes");
  classify->add_option("--tau", k.tau, "l1 budget of the score family");
  classify->add_option("--margin", k.margin, "score margin");
  classify->add_option("--depth", k.depth, "tree depth (> 0 selects the tree family)");
  classify->add_option("--tau1", k.tau1, "l1 budget of the tree family");
  classify->add_option("--tau0", k.tau0, "sparsity budget per split");
  add_common(classify);

  CLI::App* pareto = app.add_subcommand("pareto", "sweep precision floors");
  pareto->add_option("--dataset", k.dataset_path, "CSV file")->required();
  pareto->add_option("--label-col", k.label_col, "label column name or index");
  pareto->add_option("--folds", k.folds, "stratified fold count");
  pareto->add_option("--betas", thresholds, "threshold list")->required();
  pareto->add_option("--beta-class", beta_class, "class under the precision floor");
  pareto->add_option("--depth", k.depth, "tree depth (> 0 selects the tree family)");
  pareto->add_option("--tau", k.tau, "l1 budget of the score family");
  pareto->add_option("--tau1", k.tau1, "l1 budget of the tree family");
  pareto->add_option("--tau0", k.tau0, "sparsity budget per split");
  pareto->add_option("--margin", k.margin, "score margin");
  add_common(pareto);

  CLI11_PARSE(app, argc, argv);
  apply_env_out_dir(c);

  try {
    if (solve->parsed()) return run_solve(problem_path, c);
    if (classify->parsed()) return run_classify(c, k);
    if (pareto->parsed()) return run_pareto(c, k, thresholds, beta_class);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
