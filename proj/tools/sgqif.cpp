// Command-line front end: simulate data, fit / tune / screen, run experiments.

#include "sgqif/error.hpp"
#include "sgqif/experiment.hpp"
#include "sgqif/io.hpp"
#include "sgqif/screen.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace sgqif;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out;  // "" or "-": stdout for single-document commands
};

struct ScenarioFlags {
  std::string scenario = "1";
  ScenarioConfig config;
  void add(CLI::App* app) {
    app->add_option("--scenario", scenario, "1 | gene-expression, 2 | dichotomized-snp, 3 | ld-snp")
        ->capture_default_str();
    app->add_option("--n", config.n, "subjects")->capture_default_str();
    app->add_option("--k", config.k, "time points")->capture_default_str();
    app->add_option("--p", config.p, "genetic factors")->capture_default_str();
    app->add_option("--q", config.q, "environment factors")->capture_default_str();
    app->add_option("--rho-x", config.rho_x, "AR-1 correlation of gene expression")->capture_default_str();
    app->add_option("--tau", config.tau, "exchangeable error correlation")->capture_default_str();
    app->add_option("--maf", config.maf, "minor allele frequency (scenario 3)")->capture_default_str();
    app->add_option("--ld-r", config.r, "LD correlation between adjacent SNPs (scenario 3)")->capture_default_str();
    app->add_option("--n-true", config.n_true, "nonzero genetic effects")->capture_default_str();
    app->add_option("--missing", config.missing_fraction, "fraction of time points deleted")->capture_default_str();
    app->add_flag("--time-varying-env", config.time_varying_env, "redraw E at every time point");
  }
  ScenarioConfig resolve(std::uint64_t seed) const {
    ScenarioConfig c = config;
    c.scenario = parse_scenario(scenario);
    c.seed = seed;
    c.validate();
    return c;
  }
};

struct FitFlags {
  std::string penalty = "sparse-group";
  std::string corr = "exchangeable";
  double gamma = 3.0;
  int max_iter = 200;
  double tol = 1e-3;
  double threshold = kDefaultSelectionThreshold;
  void add(CLI::App* app) {
    app->add_option("--penalty", penalty, "sparse-group | group | individual")->capture_default_str();
    app->add_option("--corr", corr, "independence | exchangeable | ar1")->capture_default_str();
    app->add_option("--gamma", gamma, "MCP regularization parameter")->capture_default_str();
    app->add_option("--max-iter", max_iter, "Newton iteration cap")->capture_default_str();
    app->add_option("--tol", tol, "stop when mean |delta beta| falls below this")->capture_default_str();
    app->add_option("--threshold", threshold, "|beta| above this counts as selected")->capture_default_str();
  }
  NewtonOptions newton() const {
    NewtonOptions o;
    o.max_iter = max_iter;
    o.tol = tol;
    if (max_iter < 1) reject("--max-iter must be at least 1");
    if (!(tol > 0.0)) reject("--tol must be positive");
    return o;
  }
};

void emit(const Globals& g, const Json& doc) {
  if (g.out.empty() || g.out == "-") {
    std::cout << doc.dump(2) << '\n';
  } else {
    write_json(g.out, doc);
  }
}

fs::path out_dir(const Globals& g, const char* fallback) { return g.out.empty() || g.out == "-" ? fs::path(fallback) : fs::path(g.out); }

WarmStart parse_warm_start(const std::string& w) {
  if (w == "none") return WarmStart::None;
  if (w == "ascending") return WarmStart::Ascending;
  if (w == "descending") return WarmStart::Descending;
  reject("--warm-start must be none, ascending or descending");
}

TuningGrid make_grid(std::vector<double> l1, std::vector<double> l2, double gamma) {
  TuningGrid grid = TuningGrid::log_spaced(0.01, 0.5, 10);
  if (!l1.empty()) grid.lambda1 = std::move(l1);
  if (!l2.empty()) grid.lambda2 = std::move(l2);
  grid.gamma = gamma;
  grid.validate();
  return grid;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return 2;
    case ErrorKind::Io: return 3;
    default: return 4;
  }
}

int fail(std::string_view kind, const std::string& message, int code) {
  Json err{{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << err.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-group penalized QIF for longitudinal G x E studies"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "master seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads (<= 0: all cores)")->capture_default_str();
  app.add_option("--out", g.out, "output file or directory ('-' or empty: stdout where possible)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate train/validate/test CSVs and a truth JSON");
  ScenarioFlags sim_flags;
  sim_flags.add(sim);
  std::uint64_t sim_replicate = 0;
  sim->add_option("--replicate", sim_replicate, "replicate index (selects the RNG stream)")->capture_default_str();

  // fit
  auto* fit = app.add_subcommand("fit", "fit the penalized QIF at fixed tuning parameters");
  std::string fit_data;
  double fit_l1 = 0.05, fit_l2 = 0.05;
  std::optional<double> fit_lambda_init;
  std::string fit_init_file;
  FitFlags fit_flags;
  fit->add_option("--data", fit_data, "training dataset CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--lambda1", fit_l1, "group tuning parameter")->capture_default_str();
  fit->add_option("--lambda2", fit_l2, "individual tuning parameter")->capture_default_str();
  fit->add_option("--lambda-init", fit_lambda_init, "LASSO initializer penalty (default: bisection to n/2 active)");
  fit->add_option("--init", fit_init_file, "JSON with beta_hat or beta_true to start from")->check(CLI::ExistingFile);
  fit_flags.add(fit);

  // tune
  auto* tune = app.add_subcommand("tune", "choose (lambda1, lambda2) on a validation set or by k-fold CV");
  std::string tune_data, tune_validation, tune_warm = "none";
  std::vector<double> tune_l1, tune_l2;
  int tune_folds = 0;
  FitFlags tune_flags;
  tune->add_option("--data", tune_data, "training dataset CSV")->required()->check(CLI::ExistingFile);
  auto* vopt = tune->add_option("--validation-file", tune_validation, "validation dataset CSV")->check(CLI::ExistingFile);
  auto* fopt = tune->add_option("--folds", tune_folds, "k-fold cross-validation instead of a validation file");
  vopt->excludes(fopt);
  tune->add_option("--grid-l1", tune_l1, "lambda1 values, ascending (default: 10 log-spaced in [0.01, 0.5])")
      ->delimiter(',');
  tune->add_option("--grid-l2", tune_l2, "lambda2 values, ascending")->delimiter(',');
  tune->add_option("--warm-start", tune_warm, "none | ascending | descending")->capture_default_str();
  tune_flags.add(tune);

  // screen
  auto* scr = app.add_subcommand("screen", "marginal G x E screening");
  std::string scr_data;
  double scr_cutoff = kDefaultScreenCutoff;
  scr->add_option("--data", scr_data, "dataset CSV")->required()->check(CLI::ExistingFile);
  scr->add_option("--cutoff", scr_cutoff, "keep factors with min p below this")->capture_default_str();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "TP/FP against a truth file and MSE on a dataset");
  std::string ev_fit, ev_truth, ev_data;
  double ev_threshold = kDefaultSelectionThreshold;
  ev->add_option("--fit", ev_fit, "fit JSON (from fit or tune)")->required()->check(CLI::ExistingFile);
  ev->add_option("--truth", ev_truth, "truth JSON from simulate")->check(CLI::ExistingFile);
  ev->add_option("--data", ev_data, "dataset CSV for prediction MSE")->check(CLI::ExistingFile);
  ev->add_option("--threshold", ev_threshold, "selection threshold")->capture_default_str();

  // run-experiment
  auto* exp = app.add_subcommand("run-experiment", "Monte Carlo replicates: simulate, tune, score, summarize");
  ScenarioFlags exp_flags;
  exp_flags.add(exp);
  std::string exp_config_file, exp_warm = "none";
  int exp_reps = 10;
  std::vector<std::string> exp_methods{"sparse-group", "group", "individual"}, exp_corr{"exchangeable"};
  std::vector<double> exp_l1, exp_l2;
  double exp_gamma = 3.0;
  exp->add_option("--config", exp_config_file, "experiment JSON; command-line flags given explicitly override it")
      ->check(CLI::ExistingFile);
  exp->add_option("--replicates", exp_reps, "replicate count")->capture_default_str();
  exp->add_option("--methods", exp_methods, "penalty variants")->delimiter(',')->capture_default_str();
  exp->add_option("--corr", exp_corr, "working correlation structures")->delimiter(',')->capture_default_str();
  exp->add_option("--grid-l1", exp_l1, "lambda1 values")->delimiter(',');
  exp->add_option("--grid-l2", exp_l2, "lambda2 values")->delimiter(',');
  exp->add_option("--gamma", exp_gamma, "MCP regularization parameter")->capture_default_str();
  exp->add_option("--warm-start", exp_warm, "none | ascending | descending")->capture_default_str();

  // bench
  auto* ben = app.add_subcommand("bench", "time the fit stage at fixed tuning parameters");
  ScenarioFlags ben_flags;
  ben_flags.add(ben);
  int ben_reps = 3;
  double ben_l1 = 0.05, ben_l2 = 0.05;
  std::vector<std::string> ben_methods{"sparse-group"}, ben_corr{"independence", "exchangeable", "ar1"};
  ben->add_option("--replicates", ben_reps, "replicate count")->capture_default_str();
  ben->add_option("--lambda1", ben_l1)->capture_default_str();
  ben->add_option("--lambda2", ben_l2)->capture_default_str();
  ben->add_option("--methods", ben_methods)->delimiter(',')->capture_default_str();
  ben->add_option("--corr", ben_corr)->delimiter(',')->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("InvalidInput", e.what(), 2);
  }

  try {
    if (*sim) {
      const ScenarioConfig config = sim_flags.resolve(g.seed);
      const ReplicateData data = simulate_replicate(config, sim_replicate);
      const fs::path dir = out_dir(g, "simulated");
      write_dataset_csv(dir / "train.csv", data.truth.dataset);
      write_dataset_csv(dir / "validate.csv", data.validate);
      write_dataset_csv(dir / "test.csv", data.test);
      write_json(dir / "truth.json", truth_json(data.truth, config, sim_replicate));
      std::cout << Json{{"written", {(dir / "train.csv").string(), (dir / "validate.csv").string(),
                                     (dir / "test.csv").string(), (dir / "truth.json").string()}}}
                       .dump(2)
                << '\n';
    } else if (*fit) {
      const LongitudinalDataset data = read_dataset_csv(fs::path(fit_data));
      require_valid(data);
      const ExpandedDesign design = expand_design(data);
      PenaltySpec spec;
      spec.kind = parse_penalty(fit_flags.penalty);
      spec.lambda1 = fit_l1;
      spec.lambda2 = fit_l2;
      spec.gamma = fit_flags.gamma;
      spec.validate();
      Vector beta0;
      double lambda_init = 0.0;
      if (!fit_init_file.empty()) {
        beta0 = beta_from_json(read_json(fit_init_file));
        if (beta0.size() != design.d()) reject("--init coefficient length does not match the dataset");
      } else {
        const LassoResult init = fit_lambda_init ? init_lasso(design, *fit_lambda_init) : init_lasso_auto(design);
        beta0 = init.beta;
        lambda_init = init.lambda;
      }
      const QifEngine engine(design, WorkingCorrelation{parse_correlation(fit_flags.corr)});
      const FitResult result = newton_fit(engine, spec, beta0, fit_flags.newton(), fit_flags.threshold);
      Json doc = result;
      doc["config"] = {{"data", fit_data},
                       {"penalty", spec},
                       {"corr", std::string(to_string(engine.structure().kind))},
                       {"max_iter", fit_flags.max_iter},
                       {"tol", fit_flags.tol},
                       {"threshold", fit_flags.threshold},
                       {"lambda_init", lambda_init},
                       {"seed", g.seed}};
      emit(g, doc);
      return result.converged ? 0 : 4;
    } else if (*tune) {
      const LongitudinalDataset data = read_dataset_csv(fs::path(tune_data));
      require_valid(data);
      PenaltySpec spec;
      spec.kind = parse_penalty(tune_flags.penalty);
      spec.gamma = tune_flags.gamma;
      const TuningGrid grid = make_grid(tune_l1, tune_l2, tune_flags.gamma);
      TuningOptions options;
      options.newton = tune_flags.newton();
      options.threshold = tune_flags.threshold;
      options.warm_start = parse_warm_start(tune_warm);
      options.threads = g.threads;
      const WorkingCorrelation structure{parse_correlation(tune_flags.corr)};
      Json config{{"data", tune_data},  {"penalty", spec},          {"corr", tune_flags.corr},
                  {"grid", grid},       {"warm_start", tune_warm},  {"threshold", tune_flags.threshold},
                  {"seed", g.seed}};
      Json doc;
      if (!tune_validation.empty()) {
        const LongitudinalDataset val = read_dataset_csv(fs::path(tune_validation));
        require_valid(val);
        if (val.q != data.q || val.p != data.p) reject("validation dataset has different q or p");
        doc = grid_tune(expand_design(data), expand_design(val), grid, spec, structure, options);
        config["validation_file"] = tune_validation;
      } else {
        if (tune_folds == 0) reject("tune needs --validation-file or --folds");
        doc = cross_validate(data, tune_folds, grid, spec, structure, options, g.seed);
        config["folds"] = tune_folds;
      }
      doc["config"] = config;
      emit(g, doc);
    } else if (*scr) {
      const LongitudinalDataset data = read_dataset_csv(fs::path(scr_data));
      require_valid(data);
      const ScreenReport report = marginal_screen(data, scr_cutoff);
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
      Json doc{{"config", {{"data", scr_data}, {"cutoff", scr_cutoff}}},
               {"kept", report.kept},
               {"warnings", report.warnings}};
      std::ostringstream csv;
      csv << "factor,min_p,kept\n";
      std::size_t next_kept = 0;
      for (std::size_t v = 0; v < report.min_p.size(); ++v) {
        const bool kept = next_kept < report.kept.size() && report.kept[next_kept] == static_cast<int>(v);
        if (kept) ++next_kept;
        csv << "x" << v + 1 << ',' << format_double(report.min_p[v]) << ',' << (kept ? 1 : 0) << '\n';
      }
      if (g.out.empty() || g.out == "-") {
        doc["min_p"] = report.min_p;
        std::cout << doc.dump(2) << '\n';
      } else {
        const fs::path dir(g.out);
        write_json(dir / "screen.json", doc);
        write_text(dir / "min_p.csv", csv.str());
      }
    } else if (*ev) {
      const Json fit_doc = read_json(ev_fit);
      const Json& best = fit_doc.contains("best_fit") ? fit_doc.at("best_fit") : fit_doc;
      const Vector beta = beta_from_json(best);
      Json doc{{"config", {{"fit", ev_fit}, {"truth", ev_truth}, {"data", ev_data}, {"threshold", ev_threshold}}}};
      if (ev_truth.empty() && ev_data.empty()) reject("evaluate needs --truth and/or --data");
      std::optional<CoefficientLayout> layout;
      if (!ev_truth.empty()) {
        const Json truth = read_json(ev_truth);
        layout.emplace(truth.at("q").get<int>(), truth.at("p").get<int>());
        if (layout->d != beta.size()) reject("fit and truth have different coefficient counts");
        std::vector<std::pair<int, int>> inter;
        for (const auto& vu : truth.at("true_inter")) inter.emplace_back(vu[0].get<int>(), vu[1].get<int>());
        const Selection sel = threshold_select(beta, *layout, ev_threshold);
        MetricsReport m = tpfp(sel, truth.at("true_main").get<std::vector<int>>(), inter);
        doc["selected"] = sel;
        doc["metrics"] = m;
      }
      if (!ev_data.empty()) {
        const LongitudinalDataset data = read_dataset_csv(fs::path(ev_data));
        require_valid(data);
        const ExpandedDesign design = expand_design(data);
        if (design.d() != beta.size()) reject("fit and dataset have different coefficient counts");
        const double mse = predict_mse(beta, design);
        doc["mse"] = mse;
        if (doc.contains("metrics")) doc["metrics"]["mse"] = mse;
      }
      emit(g, doc);
    } else if (*exp) {
      ExperimentConfig config;
      if (!exp_config_file.empty()) read_json(exp_config_file).get_to(config);
      auto given = [&](const char* name) { return exp->count(name) > 0; };
      if (exp_config_file.empty() || given("--scenario") || given("--n") || given("--k") || given("--p") ||
          given("--q") || given("--rho-x") || given("--tau") || given("--maf") || given("--ld-r") ||
          given("--n-true") || given("--missing") || given("--time-varying-env")) {
        const std::uint64_t keep_seed = config.scenario.seed;
        config.scenario = exp_flags.resolve(keep_seed);
      }
      if (exp_config_file.empty() || app.count("--seed")) config.scenario.seed = g.seed;
      if (exp_config_file.empty() || given("--replicates")) config.replicates = exp_reps;
      if (exp_config_file.empty() || given("--methods")) {
        config.methods.clear();
        for (const auto& m : exp_methods) config.methods.push_back(parse_penalty(m));
      }
      if (exp_config_file.empty() || given("--corr")) {
        config.structures.clear();
        for (const auto& c : exp_corr) config.structures.push_back(parse_correlation(c));
      }
      if (exp_config_file.empty() || given("--gamma")) config.penalty.gamma = exp_gamma;
      if (exp_config_file.empty() || given("--grid-l1") || given("--grid-l2") || given("--gamma")) {
        if (!exp_config_file.empty()) {
          if (exp_l1.empty()) exp_l1 = config.grid.lambda1;
          if (exp_l2.empty()) exp_l2 = config.grid.lambda2;
        }
        config.grid = make_grid(exp_l1, exp_l2, config.penalty.gamma);
      }
      if (exp_config_file.empty() || given("--warm-start")) config.tuning.warm_start = parse_warm_start(exp_warm);
      config.threads = g.threads;
      config.out_dir = out_dir(g, "experiment");
      const ExperimentReport report = run_experiment(config);
      write_experiment(report);
      std::cout << summary_table(report.summary);
      for (const auto& row : report.rows)
        if (!row.ok)
          std::cerr << "replicate " << row.replicate << " " << to_string(row.structure) << "/"
                    << to_string(row.method) << " failed: " << row.message << '\n';
    } else if (*ben) {
      ExperimentConfig config;
      config.scenario = ben_flags.resolve(g.seed);
      config.replicates = ben_reps;
      config.methods.clear();
      for (const auto& m : ben_methods) config.methods.push_back(parse_penalty(m));
      config.structures.clear();
      for (const auto& c : ben_corr) config.structures.push_back(parse_correlation(c));
      const auto rows = bench(config, ben_l1, ben_l2);
      emit(g, bench_json(config, ben_l1, ben_l2, rows));
    }
  } catch (const Error& e) {
    return fail(to_string(e.kind()), e.what(), exit_code(e.kind()));
  } catch (const Json::exception& e) {
    return fail("InvalidInput", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("Internal", e.what(), 1);
  }
  return 0;
}
