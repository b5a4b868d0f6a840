#pragma once

#include "sgqif/solver.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sgqif {

struct TuningGrid {
  std::vector<double> lambda1;  // ascending, positive
  std::vector<double> lambda2;  // ascending, positive
  double gamma = 3.0;

  static TuningGrid log_spaced(double lo, double hi, int count);
  static std::vector<double> log_values(double lo, double hi, int count);
  void validate() const;
};

// None starts every cell from the shared LASSO fit. Chained starts make a cell
// depend on its neighbour: the mean |delta beta| stopping rule is loose enough
// that a warm-started fit often stops after one step near the previous
// solution, and the quadratic approximation cannot revive an exact zero.
enum class WarmStart { None, Ascending, Descending };

struct TuningOptions {
  NewtonOptions newton;
  double threshold = kDefaultSelectionThreshold;
  WarmStart warm_start = WarmStart::None;
  // Group ignores lambda2 and Individual ignores lambda1; fit only the axis
  // the penalty uses instead of repeating identical problems.
  bool collapse_unused_axis = true;
  Index lasso_max_active = -1;  // -1: n / 2
  int threads = 1;              // warm-start chains fitted concurrently; <= 0: all cores
};

struct GridCell {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double mse = 0.0;
  bool ok = false;  // fit finished and converged
  int iterations = 0;
  std::string message;
};

struct GridReport {
  std::vector<GridCell> cells;
  std::size_t best = 0;
  double best_lambda1 = 0.0;
  double best_lambda2 = 0.0;
  double best_mse = 0.0;
  FitResult best_fit;
};

double predict_mse(const Vector& beta, const ExpandedDesign& data);
inline double predict_mse(const FitResult& fit, const ExpandedDesign& data) { return predict_mse(fit.beta_hat, data); }

// Fits every cell on `train`, scores prediction MSE on `validate` and returns
// the argmin (ties: smaller lambda1, then smaller lambda2). beta_init, when
// given, replaces the LASSO initializer.
GridReport grid_tune(const ExpandedDesign& train, const ExpandedDesign& validate, const TuningGrid& grid,
                     const PenaltySpec& spec_template, WorkingCorrelation structure,
                     const TuningOptions& options = {}, const Vector* beta_init = nullptr);
GridReport grid_tune(const QifEngine& engine, const ExpandedDesign& validate, const TuningGrid& grid,
                     const PenaltySpec& spec_template, const TuningOptions& options = {},
                     const Vector* beta_init = nullptr);

struct CvReport {
  std::vector<int> fold_of;            // per subject
  std::vector<GridCell> cells;         // mse = mean held-out fold MSE
  std::vector<std::vector<double>> fold_mse;  // [cell][fold]
  std::size_t best = 0;
  double best_lambda1 = 0.0;
  double best_lambda2 = 0.0;
};

// Subjects shuffled with the seed, then dealt round robin into folds.
std::vector<int> assign_folds(int n, int folds, std::uint64_t seed);

CvReport cross_validate(const LongitudinalDataset& data, const std::vector<int>& fold_of, const TuningGrid& grid,
                        const PenaltySpec& spec_template, WorkingCorrelation structure,
                        const TuningOptions& options = {});
CvReport cross_validate(const LongitudinalDataset& data, int folds, const TuningGrid& grid,
                        const PenaltySpec& spec_template, WorkingCorrelation structure,
                        const TuningOptions& options = {}, std::uint64_t seed = 1);

struct MetricsReport {
  int tp_main = 0;
  int fp_main = 0;
  int tp_inter = 0;
  int fp_inter = 0;
  int tp_overall = 0;
  int fp_overall = 0;
  double mse = 0.0;
};

MetricsReport tpfp(const Selection& selected, const std::vector<int>& true_main,
                   const std::vector<std::pair<int, int>>& true_inter);

}  // namespace sgqif
