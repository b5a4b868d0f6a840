#include "sgqif/experiment.hpp"

#include "sgqif/error.hpp"
#include "sgqif/parallel.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <memory>
#include <numeric>
#include <sstream>

namespace sgqif {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

void ExperimentConfig::validate() const {
  scenario.validate();
  penalty.validate();
  grid.validate();
  if (replicates < 1) reject("replicate count must be at least 1");
  if (structures.empty()) reject("at least one working correlation structure is required");
  if (methods.empty()) reject("at least one penalty method is required");
}

void to_json(Json& j, const ExperimentConfig& c) {
  Json structures = Json::array(), methods = Json::array();
  for (auto s : c.structures) structures.push_back(std::string(to_string(s)));
  for (auto m : c.methods) methods.push_back(std::string(to_string(m)));
  j = Json{{"scenario", c.scenario},
           {"structures", structures},
           {"methods", methods},
           {"gamma", c.penalty.gamma},
           {"epsilon", c.penalty.epsilon},
           {"grid", c.grid},
           {"replicates", c.replicates},
           {"threshold", c.tuning.threshold},
           {"max_iter", c.tuning.newton.max_iter},
           {"tol", c.tuning.newton.tol},
           {"warm_start", c.tuning.warm_start == WarmStart::None        ? "none"
                          : c.tuning.warm_start == WarmStart::Ascending ? "ascending"
                                                                        : "descending"},
           {"seed", c.scenario.seed}};
}

void from_json(const Json& j, ExperimentConfig& c) {
  if (j.contains("scenario")) j.at("scenario").get_to(c.scenario);
  if (j.contains("seed")) c.scenario.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("structures")) {
    c.structures.clear();
    for (const auto& s : j.at("structures")) c.structures.push_back(parse_correlation(s.get<std::string>()));
  }
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(parse_penalty(m.get<std::string>()));
  }
  if (j.contains("gamma")) c.penalty.gamma = j.at("gamma").get<double>();
  if (j.contains("epsilon")) c.penalty.epsilon = j.at("epsilon").get<double>();
  if (j.contains("grid")) j.at("grid").get_to(c.grid);
  c.grid.gamma = c.penalty.gamma;
  if (j.contains("replicates")) c.replicates = j.at("replicates").get<int>();
  if (j.contains("threshold")) c.tuning.threshold = j.at("threshold").get<double>();
  if (j.contains("max_iter")) c.tuning.newton.max_iter = j.at("max_iter").get<int>();
  if (j.contains("tol")) c.tuning.newton.tol = j.at("tol").get<double>();
  if (j.contains("warm_start")) {
    const std::string w = j.at("warm_start").get<std::string>();
    if (w == "none") c.tuning.warm_start = WarmStart::None;
    else if (w == "ascending") c.tuning.warm_start = WarmStart::Ascending;
    else if (w == "descending") c.tuning.warm_start = WarmStart::Descending;
    else reject("warm_start must be none, ascending or descending");
  }
}

MeanSd mean_sd(const std::vector<double>& values) {
  MeanSd m;
  if (values.empty()) return m;
  const double count = static_cast<double>(values.size());
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / count;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.sd = std::sqrt(ss / (count - 1.0));
  }
  return m;
}

std::string format_mean_sd(const MeanSd& m, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << m.mean << '(' << m.sd << ')';
  return os.str();
}

std::vector<SummaryRow> summarize(const std::vector<ReplicateRow>& rows) {
  std::vector<SummaryRow> out;
  std::vector<std::vector<const ReplicateRow*>> members;
  for (const auto& r : rows) {
    std::size_t slot = 0;
    while (slot < out.size() && !(out[slot].method == r.method && out[slot].structure == r.structure)) ++slot;
    if (slot == out.size()) {
      SummaryRow s;
      s.method = r.method;
      s.structure = r.structure;
      out.push_back(s);
      members.emplace_back();
    }
    if (r.ok) {
      ++out[slot].succeeded;
      members[slot].push_back(&r);
    } else {
      ++out[slot].failed;
    }
  }
  for (std::size_t s = 0; s < out.size(); ++s) {
    auto collect = [&](auto field) {
      std::vector<double> v;
      for (const auto* r : members[s]) v.push_back(static_cast<double>(field(r->metrics)));
      return mean_sd(v);
    };
    out[s].tp_main = collect([](const MetricsReport& m) { return m.tp_main; });
    out[s].fp_main = collect([](const MetricsReport& m) { return m.fp_main; });
    out[s].tp_inter = collect([](const MetricsReport& m) { return m.tp_inter; });
    out[s].fp_inter = collect([](const MetricsReport& m) { return m.fp_inter; });
    out[s].tp = collect([](const MetricsReport& m) { return m.tp_overall; });
    out[s].fp = collect([](const MetricsReport& m) { return m.fp_overall; });
    out[s].mse = collect([](const MetricsReport& m) { return m.mse; });
  }
  return out;
}

namespace {

std::vector<ReplicateRow> run_replicate(const ExperimentConfig& config, int replicate) {
  std::vector<ReplicateRow> rows;
  auto blank = [&](CorrelationKind s, PenaltyKind m) {
    ReplicateRow row;
    row.replicate = replicate;
    row.structure = s;
    row.method = m;
    return row;
  };
  ReplicateData data;
  std::vector<ExpandedDesign> designs;
  Vector init;
  try {
    data = simulate_replicate(config.scenario, static_cast<std::uint64_t>(replicate));
    designs.push_back(expand_design(data.truth.dataset));
    designs.push_back(expand_design(data.validate));
    designs.push_back(expand_design(data.test));
    init = init_lasso_auto(designs[0], config.tuning.lasso_max_active).beta;
  } catch (const std::exception& e) {
    for (auto s : config.structures)
      for (auto m : config.methods) {
        rows.push_back(blank(s, m));
        rows.back().message = std::string("data generation failed: ") + e.what();
      }
    return rows;
  }
  for (auto s : config.structures) {
    std::unique_ptr<QifEngine> engine;
    std::string engine_error;
    try {
      engine = std::make_unique<QifEngine>(designs[0], WorkingCorrelation{s});
    } catch (const std::exception& e) {
      engine_error = e.what();
    }
    for (auto m : config.methods) {
      ReplicateRow row = blank(s, m);
      if (!engine) {
        row.message = engine_error;
        rows.push_back(row);
        continue;
      }
      const auto start = Clock::now();
      try {
        PenaltySpec spec = config.penalty;
        spec.kind = m;
        TuningOptions options = config.tuning;
        options.threads = 1;
        const GridReport report = grid_tune(*engine, designs[1], config.grid, spec, options, &init);
        row.seconds = seconds_since(start);
        row.lambda1 = report.best_lambda1;
        row.lambda2 = report.best_lambda2;
        row.iterations = report.best_fit.iterations;
        row.metrics = tpfp(report.best_fit.selected, data.truth.true_main, data.truth.true_inter);
        row.metrics.mse = predict_mse(report.best_fit, designs[2]);
        row.ok = true;
      } catch (const std::exception& e) {
        row.seconds = seconds_since(start);
        row.message = e.what();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config = config;
  std::vector<std::vector<ReplicateRow>> per_replicate(config.replicates);
  parallel_for(config.replicates, config.threads, [&](int r) { per_replicate[r] = run_replicate(config, r); });
  for (auto& rows : per_replicate)
    for (auto& row : rows) report.rows.push_back(std::move(row));
  report.summary = summarize(report.rows);
  return report;
}

std::string replicates_csv(const std::vector<ReplicateRow>& rows) {
  std::ostringstream os;
  os << "replicate,structure,method,ok,lambda1,lambda2,iterations,tp_main,fp_main,tp_inter,fp_inter,tp,fp,mse,message\n";
  for (const auto& r : rows) {
    os << r.replicate << ',' << to_string(r.structure) << ',' << to_string(r.method) << ',' << (r.ok ? 1 : 0) << ','
       << format_double(r.lambda1) << ',' << format_double(r.lambda2) << ',' << r.iterations << ','
       << r.metrics.tp_main << ',' << r.metrics.fp_main << ','
       << r.metrics.tp_inter << ',' << r.metrics.fp_inter << ',' << r.metrics.tp_overall << ','
       << r.metrics.fp_overall << ',' << format_double(r.metrics.mse) << ',' << csv_field(r.message) << '\n';
  }
  return os.str();
}

std::string timings_csv(const std::vector<ReplicateRow>& rows) {
  std::ostringstream os;
  os << "replicate,structure,method,seconds\n";
  for (const auto& r : rows)
    os << r.replicate << ',' << to_string(r.structure) << ',' << to_string(r.method) << ',' << format_double(r.seconds)
       << '\n';
  return os.str();
}

std::string summary_table(const std::vector<SummaryRow>& summary) {
  std::ostringstream os;
  os << std::left << std::setw(14) << "structure" << std::setw(14) << "method" << std::setw(12) << "TP.main"
     << std::setw(12) << "FP.main" << std::setw(12) << "TP.inter" << std::setw(12) << "FP.inter" << std::setw(12)
     << "TP" << std::setw(12) << "FP" << std::setw(14) << "MSE" << "ok/failed\n";
  for (const auto& s : summary) {
    os << std::left << std::setw(14) << to_string(s.structure) << std::setw(14) << to_string(s.method)
       << std::setw(12) << format_mean_sd(s.tp_main) << std::setw(12) << format_mean_sd(s.fp_main) << std::setw(12)
       << format_mean_sd(s.tp_inter) << std::setw(12) << format_mean_sd(s.fp_inter) << std::setw(12)
       << format_mean_sd(s.tp) << std::setw(12) << format_mean_sd(s.fp) << std::setw(14)
       << format_mean_sd(s.mse, 3) << s.succeeded << '/' << s.failed << '\n';
  }
  return os.str();
}

Json report_json(const ExperimentReport& report) {
  Json summary = Json::array();
  for (const auto& s : report.summary) {
    auto cell = [](const MeanSd& m) { return Json{{"mean", m.mean}, {"sd", m.sd}}; };
    summary.push_back({{"structure", std::string(to_string(s.structure))},
                       {"method", std::string(to_string(s.method))},
                       {"succeeded", s.succeeded},
                       {"failed", s.failed},
                       {"tp_main", cell(s.tp_main)},
                       {"fp_main", cell(s.fp_main)},
                       {"tp_inter", cell(s.tp_inter)},
                       {"fp_inter", cell(s.fp_inter)},
                       {"tp", cell(s.tp)},
                       {"fp", cell(s.fp)},
                       {"mse", cell(s.mse)},
                       {"table", {{"tp", format_mean_sd(s.tp)}, {"fp", format_mean_sd(s.fp)},
                                  {"mse", format_mean_sd(s.mse, 3)}}}});
  }
  return Json{{"config", report.config}, {"summary", summary}};
}

void write_experiment(const ExperimentReport& report) {
  const auto& dir = report.config.out_dir;
  if (dir.empty()) return;
  std::ostringstream header;
  header << "# config " << Json(report.config).dump() << '\n';
  write_text(dir / "replicates.csv", replicates_csv(report.rows));
  write_text(dir / "timings.csv", timings_csv(report.rows));
  write_text(dir / "summary.txt", header.str() + summary_table(report.summary));
  write_json(dir / "summary.json", report_json(report));
}

std::vector<BenchRow> bench(const ExperimentConfig& config, double lambda1, double lambda2) {
  config.validate();
  std::vector<BenchRow> rows;
  for (auto s : config.structures)
    for (auto m : config.methods) {
      BenchRow row;
      row.structure = s;
      row.method = m;
      rows.push_back(row);
    }
  for (int r = 0; r < config.replicates; ++r) {
    const ReplicateData data = simulate_replicate(config.scenario, static_cast<std::uint64_t>(r));
    const ExpandedDesign train = expand_design(data.truth.dataset);
    const Vector init = init_lasso_auto(train, config.tuning.lasso_max_active).beta;
    std::size_t slot = 0;
    for (auto s : config.structures) {
      for (auto m : config.methods) {
        PenaltySpec spec = config.penalty;
        spec.kind = m;
        spec.lambda1 = lambda1;
        spec.lambda2 = lambda2;
        // Engine construction is part of fitting: it holds the per-structure precomputation.
        const auto start = Clock::now();
        const QifEngine engine(train, WorkingCorrelation{s});
        newton_fit(engine, spec, init, config.tuning.newton, config.tuning.threshold);
        rows[slot++].seconds.push_back(seconds_since(start));
      }
    }
  }
  for (auto& row : rows) row.stats = mean_sd(row.seconds);
  return rows;
}

Json bench_json(const ExperimentConfig& config, double lambda1, double lambda2, const std::vector<BenchRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows)
    out.push_back({{"structure", std::string(to_string(r.structure))},
                   {"method", std::string(to_string(r.method))},
                   {"seconds", r.seconds},
                   {"mean", r.stats.mean},
                   {"sd", r.stats.sd},
                   {"table", format_mean_sd(r.stats, 3)}});
  return Json{{"config", config}, {"lambda1", lambda1}, {"lambda2", lambda2}, {"timings", out}};
}

}  // namespace sgqif
