#include "sgqif/tuning.hpp"

#include "sgqif/error.hpp"
#include "sgqif/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace sgqif {

std::vector<double> TuningGrid::log_values(double lo, double hi, int count) {
  if (count < 1 || !(lo > 0.0) || !(hi >= lo)) reject("invalid log-spaced grid");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int c = 0; c < count; ++c) out[c] = std::exp(a + (b - a) * c / (count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

TuningGrid TuningGrid::log_spaced(double lo, double hi, int count) {
  TuningGrid g;
  g.lambda1 = log_values(lo, hi, count);
  g.lambda2 = g.lambda1;
  return g;
}

void TuningGrid::validate() const {
  if (lambda1.empty() || lambda2.empty()) reject("tuning grid must be non-empty");
  for (const auto* axis : {&lambda1, &lambda2}) {
    for (std::size_t a = 0; a < axis->size(); ++a) {
      if (!((*axis)[a] > 0.0)) reject("tuning grid values must be positive");
      if (a > 0 && !((*axis)[a] > (*axis)[a - 1])) reject("tuning grid values must be strictly ascending");
    }
  }
  if (!(gamma > 1.0)) reject("MCP gamma must exceed 1");
}

double predict_mse(const Vector& beta, const ExpandedDesign& data) {
  if (beta.size() != data.d()) reject("beta length does not match design dimension");
  if (data.rows() == 0) return 0.0;
  return (data.response - data.w * beta).squaredNorm() / static_cast<double>(data.rows());
}

namespace {

struct Cell {
  double lambda1, lambda2;
};

// Cells in fitting order; each inner run along lambda2 shares one warm-start chain.
std::vector<std::vector<Cell>> fitting_plan(const TuningGrid& grid, PenaltyKind kind, const TuningOptions& options) {
  std::vector<double> l1 = grid.lambda1, l2 = grid.lambda2;
  if (options.collapse_unused_axis) {
    if (kind == PenaltyKind::Group) l2 = {grid.lambda2.front()};
    if (kind == PenaltyKind::Individual) l1 = {grid.lambda1.front()};
  }
  const bool along_l1 = options.collapse_unused_axis && kind == PenaltyKind::Group;
  std::vector<std::vector<Cell>> chains;
  if (along_l1) {
    std::vector<Cell> chain;
    for (double a : l1) chain.push_back({a, l2.front()});
    chains.push_back(std::move(chain));
  } else {
    for (double a : l1) {
      std::vector<Cell> chain;
      for (double b : l2) chain.push_back({a, b});
      chains.push_back(std::move(chain));
    }
  }
  if (options.warm_start == WarmStart::Descending)
    for (auto& chain : chains) std::reverse(chain.begin(), chain.end());
  return chains;
}

bool better(const GridCell& a, const GridCell& b) {
  if (a.mse != b.mse) return a.mse < b.mse;
  if (a.lambda1 != b.lambda1) return a.lambda1 < b.lambda1;
  return a.lambda2 < b.lambda2;
}

bool cell_order(const GridCell& a, const GridCell& b) {
  if (a.lambda1 != b.lambda1) return a.lambda1 < b.lambda1;
  return a.lambda2 < b.lambda2;
}

struct FittedCell {
  GridCell cell;
  FitResult fit;
};

// Fits the plan on one training design; calls score(fit) for each cell's MSE.
template <typename Score>
std::vector<FittedCell> fit_grid(const QifEngine& engine, const TuningGrid& grid, const PenaltySpec& spec_template,
                                 const TuningOptions& options, const Vector* beta_init, Score&& score,
                                 bool keep_fits) {
  grid.validate();
  const Vector init = beta_init ? *beta_init : init_lasso_auto(engine.design(), options.lasso_max_active).beta;
  const auto plan = fitting_plan(grid, spec_template.kind, options);
  std::vector<std::vector<FittedCell>> per_chain(plan.size());
  parallel_for(static_cast<int>(plan.size()), options.threads, [&](int ch) {
    Vector start = init;
    for (const Cell& c : plan[ch]) {
      PenaltySpec spec = spec_template;
      spec.lambda1 = c.lambda1;
      spec.lambda2 = c.lambda2;
      spec.gamma = grid.gamma;
      FittedCell fc;
      fc.cell.lambda1 = c.lambda1;
      fc.cell.lambda2 = c.lambda2;
      try {
        fc.fit = newton_fit(engine, spec, start, options.newton, options.threshold);
        fc.cell.iterations = fc.fit.iterations;
        fc.cell.ok = fc.fit.converged;
        fc.cell.message = fc.fit.message;
        fc.cell.mse = score(fc.fit);
        if (!std::isfinite(fc.cell.mse)) {
          fc.cell.ok = false;
          fc.cell.message = "non-finite prediction error";
        }
        if (options.warm_start != WarmStart::None) start = fc.fit.beta_hat;
      } catch (const Error& e) {
        fc.cell.ok = false;
        fc.cell.mse = std::numeric_limits<double>::infinity();
        fc.cell.message = e.what();
      }
      if (!keep_fits) fc.fit = FitResult{};
      per_chain[ch].push_back(std::move(fc));
    }
  });
  std::vector<FittedCell> out;
  for (auto& chain : per_chain)
    for (auto& fc : chain) out.push_back(std::move(fc));
  std::stable_sort(out.begin(), out.end(), [](const FittedCell& a, const FittedCell& b) { return cell_order(a.cell, b.cell); });
  return out;
}

[[noreturn]] void all_cells_failed(const std::vector<GridCell>& cells) {
  std::ostringstream os;
  os << "no tuning cell converged:";
  for (const auto& c : cells) os << " [" << c.lambda1 << ", " << c.lambda2 << "] " << c.message << ";";
  throw Error(ErrorKind::NoConvergence, os.str());
}

}  // namespace

GridReport grid_tune(const ExpandedDesign& train, const ExpandedDesign& validate, const TuningGrid& grid,
                     const PenaltySpec& spec_template, WorkingCorrelation structure, const TuningOptions& options,
                     const Vector* beta_init) {
  const QifEngine engine(train, structure);
  return grid_tune(engine, validate, grid, spec_template, options, beta_init);
}

GridReport grid_tune(const QifEngine& engine, const ExpandedDesign& validate, const TuningGrid& grid,
                     const PenaltySpec& spec_template, const TuningOptions& options, const Vector* beta_init) {
  if (validate.d() != engine.design().d()) reject("validation design dimension differs from training");
  auto fitted = fit_grid(engine, grid, spec_template, options, beta_init,
                         [&](const FitResult& f) { return predict_mse(f, validate); }, true);
  GridReport report;
  bool found = false;
  for (std::size_t c = 0; c < fitted.size(); ++c) {
    report.cells.push_back(fitted[c].cell);
    if (!fitted[c].cell.ok) continue;
    if (!found || better(fitted[c].cell, fitted[report.best].cell)) {
      report.best = c;
      found = true;
    }
  }
  if (!found) all_cells_failed(report.cells);
  report.best_lambda1 = fitted[report.best].cell.lambda1;
  report.best_lambda2 = fitted[report.best].cell.lambda2;
  report.best_mse = fitted[report.best].cell.mse;
  report.best_fit = std::move(fitted[report.best].fit);
  return report;
}

std::vector<int> assign_folds(int n, int folds, std::uint64_t seed) {
  if (folds < 2) reject("cross-validation needs at least 2 folds");
  if (folds > n) reject("more folds than subjects leaves a fold empty");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold_of(n);
  for (int a = 0; a < n; ++a) fold_of[order[a]] = a % folds;
  return fold_of;
}

CvReport cross_validate(const LongitudinalDataset& data, const std::vector<int>& fold_of, const TuningGrid& grid,
                        const PenaltySpec& spec_template, WorkingCorrelation structure, const TuningOptions& options) {
  if (static_cast<int>(fold_of.size()) != data.n) reject("fold assignment length differs from subject count");
  const int folds = fold_of.empty() ? 0 : *std::max_element(fold_of.begin(), fold_of.end()) + 1;
  if (folds < 2) reject("cross-validation needs at least 2 folds");
  std::vector<std::vector<int>> members(folds);
  for (int i = 0; i < data.n; ++i) {
    if (fold_of[i] < 0) reject("negative fold index");
    members[fold_of[i]].push_back(i);
  }
  for (int f = 0; f < folds; ++f)
    if (members[f].empty()) reject("fold " + std::to_string(f) + " has no subjects");

  CvReport report;
  report.fold_of = fold_of;
  std::vector<std::vector<double>> per_cell;
  for (int f = 0; f < folds; ++f) {
    std::vector<int> train_ids;
    for (int i = 0; i < data.n; ++i)
      if (fold_of[i] != f) train_ids.push_back(i);
    const ExpandedDesign train = expand_design(subset_subjects(data, train_ids));
    const ExpandedDesign held = expand_design(subset_subjects(data, members[f]));
    const QifEngine engine(train, structure);
    auto fitted = fit_grid(engine, grid, spec_template, options, nullptr,
                           [&](const FitResult& fit) { return predict_mse(fit, held); }, false);
    if (report.cells.empty()) {
      for (const auto& fc : fitted) {
        GridCell c = fc.cell;
        c.mse = 0.0;
        c.ok = true;
        c.iterations = 0;
        c.message.clear();
        report.cells.push_back(c);
      }
      per_cell.assign(report.cells.size(), {});
    }
    for (std::size_t c = 0; c < fitted.size(); ++c) {
      per_cell[c].push_back(fitted[c].cell.mse);
      report.cells[c].iterations += fitted[c].cell.iterations;
      if (!fitted[c].cell.ok) {
        report.cells[c].ok = false;
        report.cells[c].message = fitted[c].cell.message;
      }
    }
  }
  bool found = false;
  for (std::size_t c = 0; c < report.cells.size(); ++c) {
    const auto& m = per_cell[c];
    report.cells[c].mse = std::accumulate(m.begin(), m.end(), 0.0) / static_cast<double>(m.size());
    if (!report.cells[c].ok) continue;
    if (!found || better(report.cells[c], report.cells[report.best])) {
      report.best = c;
      found = true;
    }
  }
  report.fold_mse = std::move(per_cell);
  if (!found) all_cells_failed(report.cells);
  report.best_lambda1 = report.cells[report.best].lambda1;
  report.best_lambda2 = report.cells[report.best].lambda2;
  return report;
}

CvReport cross_validate(const LongitudinalDataset& data, int folds, const TuningGrid& grid,
                        const PenaltySpec& spec_template, WorkingCorrelation structure, const TuningOptions& options,
                        std::uint64_t seed) {
  return cross_validate(data, assign_folds(data.n, folds, seed), grid, spec_template, structure, options);
}

MetricsReport tpfp(const Selection& selected, const std::vector<int>& true_main,
                   const std::vector<std::pair<int, int>>& true_inter) {
  const std::set<int> main_truth(true_main.begin(), true_main.end());
  const std::set<std::pair<int, int>> inter_truth(true_inter.begin(), true_inter.end());
  const std::set<int> main_sel(selected.main.begin(), selected.main.end());
  const std::set<std::pair<int, int>> inter_sel(selected.inter.begin(), selected.inter.end());
  MetricsReport m;
  for (int v : main_sel) (main_truth.count(v) ? m.tp_main : m.fp_main) += 1;
  for (const auto& vu : inter_sel) (inter_truth.count(vu) ? m.tp_inter : m.fp_inter) += 1;
  m.tp_overall = m.tp_main + m.tp_inter;
  m.fp_overall = m.fp_main + m.fp_inter;
  return m;
}

}  // namespace sgqif
