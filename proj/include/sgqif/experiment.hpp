#pragma once

#include "sgqif/io.hpp"
#include "sgqif/tuning.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sgqif {

struct ExperimentConfig {
  ScenarioConfig scenario;
  std::vector<CorrelationKind> structures{CorrelationKind::Exchangeable};
  std::vector<PenaltyKind> methods{PenaltyKind::SparseGroup, PenaltyKind::Group, PenaltyKind::Individual};
  PenaltySpec penalty;  // gamma and epsilon; lambdas come from the grid
  TuningGrid grid = TuningGrid::log_spaced(0.01, 0.5, 10);
  TuningOptions tuning;
  int replicates = 10;
  int threads = 1;  // replicates in flight; <= 0: all cores
  std::filesystem::path out_dir;  // empty: nothing written

  void validate() const;
};

void to_json(Json& j, const ExperimentConfig& c);
void from_json(const Json& j, ExperimentConfig& c);

struct ReplicateRow {
  int replicate = 0;
  PenaltyKind method = PenaltyKind::SparseGroup;
  CorrelationKind structure = CorrelationKind::Exchangeable;
  bool ok = false;
  std::string message;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  int iterations = 0;
  double seconds = 0.0;  // tuning + final fit, wall clock
  MetricsReport metrics;  // mse on the independent test set
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample sd; 0 for a single value
};

MeanSd mean_sd(const std::vector<double>& values);
// "21.4(1.1)"
std::string format_mean_sd(const MeanSd& m, int digits = 1);

struct SummaryRow {
  PenaltyKind method = PenaltyKind::SparseGroup;
  CorrelationKind structure = CorrelationKind::Exchangeable;
  int succeeded = 0;
  int failed = 0;
  MeanSd tp_main, fp_main, tp_inter, fp_inter, tp, fp, mse;
};

std::vector<SummaryRow> summarize(const std::vector<ReplicateRow>& rows);

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ReplicateRow> rows;  // replicate-major, then structure, then method
  std::vector<SummaryRow> summary;
};

// Each replicate: simulate train / validation / test, build one engine per
// structure and one LASSO start shared by every method, tune each method on the
// validation set, score TP/FP and test MSE. Failures become rows with ok=false.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Deterministic per-replicate metrics; wall-clock times go to timings_csv so
// repeated runs with one seed give identical replicates.csv files.
std::string replicates_csv(const std::vector<ReplicateRow>& rows);
std::string timings_csv(const std::vector<ReplicateRow>& rows);
std::string summary_table(const std::vector<SummaryRow>& summary);
Json report_json(const ExperimentReport& report);
// replicates.csv, timings.csv, summary.txt and summary.json under config.out_dir.
void write_experiment(const ExperimentReport& report);

struct BenchRow {
  PenaltyKind method = PenaltyKind::SparseGroup;
  CorrelationKind structure = CorrelationKind::Exchangeable;
  std::vector<double> seconds;  // one per replicate
  MeanSd stats;
};

// Times only the Newton fit at fixed (lambda1, lambda2), single-threaded, from
// a shared LASSO start, for every method x structure.
std::vector<BenchRow> bench(const ExperimentConfig& config, double lambda1, double lambda2);
Json bench_json(const ExperimentConfig& config, double lambda1, double lambda2, const std::vector<BenchRow>& rows);

}  // namespace sgqif
