#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace sgqif {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Repeated measurements on n subjects over at most k time points.
//
// Environment factors are stored per time point so time-varying E needs no
// format change; genetic factors are time-invariant and broadcast over j.
// Missing time points are flagged in `observed`; values in unobserved cells
// are ignored everywhere downstream.
struct LongitudinalDataset {
  int n = 0;
  int k = 0;
  int q = 0;
  int p = 0;
  Matrix y;         // n x k
  Matrix env;       // (n*k) x q, row i*k + j
  Matrix gen;       // n x p
  Mask observed;    // n x k

  static LongitudinalDataset zeros(int n, int k, int q, int p);

  double e(int i, int j, int u) const { return env(static_cast<Index>(i) * k + j, u); }
  double& e(int i, int j, int u) { return env(static_cast<Index>(i) * k + j, u); }
  int observed_count(int i) const;
  Index total_observed() const;
  bool balanced() const { return observed.all(); }
};

struct Violation {
  int subject = -1;  // -1 when the violation is not tied to a subject
  int time = -1;     // -1 when not tied to a time point
  std::string field;
  std::string message;
};

std::string describe(const Violation& v);

// Never throws; an empty list means every dataset invariant holds.
std::vector<Violation> validate_dataset(const LongitudinalDataset& data);

// Throws InvalidInput listing the violations, if any.
void require_valid(const LongitudinalDataset& data);

// Centers and scales env columns (over observed cells) and gen columns (over
// subjects) to unit variance. Constant columns are centered only.
LongitudinalDataset standardize(const LongitudinalDataset& data);

// Restrict to a subset of subjects, in the order given.
LongitudinalDataset subset_subjects(const LongitudinalDataset& data, const std::vector<int>& subjects);

// Keep only the listed genetic factors, in the order given.
LongitudinalDataset subset_genes(const LongitudinalDataset& data, const std::vector<int>& genes);

struct GroupBlock {
  int factor = 0;   // genetic factor v, 0-based
  Index start = 0;  // first coefficient of (gamma_v, h_1v, ..., h_qv)
  Index size = 0;   // q + 1
};

// Coefficient layout beta = (alpha_0, alpha_1..alpha_q, eta_1, ..., eta_p).
struct CoefficientLayout {
  int q = 0;
  int p = 0;
  Index d = 0;
  std::vector<GroupBlock> groups;

  CoefficientLayout() = default;
  CoefficientLayout(int q, int p);

  Index unpenalized_count() const { return 1 + q; }
  Index group_size() const { return q + 1; }
  Index main_index(int v) const { return groups[v].start; }
  Index interaction_index(int v, int u) const { return groups[v].start + 1 + u; }
};

// Per-observation regressor rows, stacked subject by subject.
struct ExpandedDesign {
  int n = 0;
  int k = 0;
  CoefficientLayout layout;
  Matrix w;                                 // N x d, N = total observed cells
  Vector response;                          // N, aligned with rows of w
  std::vector<Index> offset;                // n + 1 row offsets
  std::vector<std::vector<int>> kept_times; // ascending 0-based time points

  Index d() const { return layout.d; }
  Index rows() const { return w.rows(); }
  Index rows_of(int i) const { return offset[i + 1] - offset[i]; }
  bool fully_observed(int i) const { return static_cast<int>(kept_times[i].size()) == k; }
  auto subject_w(int i) const { return w.middleRows(offset[i], rows_of(i)); }
  auto subject_y(int i) const { return response.segment(offset[i], rows_of(i)); }
};

ExpandedDesign expand_design(const LongitudinalDataset& data);

}  // namespace sgqif
