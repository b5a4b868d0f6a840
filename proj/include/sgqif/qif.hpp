#pragma once

#include "sgqif/correlation.hpp"
#include "sgqif/dataset.hpp"

#include <vector>

namespace sgqif {

// Extended score at one beta: per-subject phi_i stacked as columns.
struct ExtendedScore {
  Vector phi_bar;  // m*d
  Matrix scores;   // m*d x n

  Index subjects() const { return scores.cols(); }
  // Omega_bar = (1/n) sum_i phi_i phi_i^T, materialized on request.
  Matrix omega_bar() const;
};

// Moore-Penrose inverse of Omega_bar kept in factored form:
// factor^T * factor = pinv(Omega_bar). Eigenvalues below
// rel_cutoff * largest are treated as zero.
struct OmegaPseudoInverse {
  Matrix factor;  // rank x m*d
  Index rank = 0;
  double largest_eigenvalue = 0.0;

  Matrix matrix() const { return factor.transpose() * factor; }
};

inline constexpr double kPinvRelativeCutoff = 1e-8;

OmegaPseudoInverse omega_pseudo_inverse(const ExtendedScore& score, double rel_cutoff = kPinvRelativeCutoff);

// Q_n = phi_bar^T pinv(Omega_bar) phi_bar. Throws RankZero if Omega_bar vanishes.
double qif_objective(const ExtendedScore& score);
double qif_objective(const ExtendedScore& score, const OmegaPseudoInverse& pinv);

struct QifDerivatives {
  Vector p_vec;  // 2 J^T pinv(Omega) phi_bar, gradient of Q with Omega held fixed
  Matrix v_mat;  // 2 J^T pinv(Omega) J
};

QifDerivatives qif_derivatives(const ExtendedScore& score, const OmegaPseudoInverse& pinv, const Matrix& jac);

struct QifEvaluation {
  ExtendedScore score;
  Index rank = 0;                   // of Omega_bar after the cutoff
  double largest_eigenvalue = 0.0;  // of Omega_bar
  double q_value = 0.0;
  Vector p_vec;
  Matrix v_mat;
  // F phi_bar and F J with F^T F = pinv(Omega_bar); the frozen-Omega objective at beta + delta
  // is || whitened_score + whitened_jac * delta ||^2.
  Vector whitened_score;
  Matrix whitened_jac;

  double frozen_objective(const Vector& delta) const {
    return (whitened_score + whitened_jac * delta).squaredNorm();
  }
};

// Evaluates the extended score and its derivatives for one dataset and
// working correlation. The Jacobian J = d phi_bar / d beta does not depend on
// beta under the identity link and is computed once at construction.
class QifEngine {
 public:
  struct Options {
    // Send every subject through its ClusterTransform, including complete ones.
    bool transform_complete_subjects = false;
    double pinv_cutoff = kPinvRelativeCutoff;
    // When m*d > n, precompute sum_t Z_t Z_t^T and sum_t Z_t J_t once so each
    // evaluation works with n x n and n x d products only.
    bool gram_shortcut = true;
  };

  QifEngine(const ExpandedDesign& design, WorkingCorrelation structure);
  QifEngine(const ExpandedDesign& design, WorkingCorrelation structure, Options options);

  const ExpandedDesign& design() const { return *design_; }
  WorkingCorrelation structure() const { return structure_; }
  int basis_count() const { return static_cast<int>(bases_.size()); }
  int subjects() const { return design_->n; }
  Index moment_dim() const { return basis_count() * design_->d(); }
  const Matrix& jacobian() const { return jac_; }

  ExtendedScore extended_score(const Vector& beta) const;
  double objective(const Vector& beta) const { return qif_objective(extended_score(beta)); }
  QifEvaluation evaluate(const Vector& beta) const;

 private:
  // Rows M_t* W_i* for every subject, stacked like design.w (t >= 1 only;
  // M_1 = I so its weighted rows are design.w itself).
  const Matrix& weighted_rows(int t) const { return t == 0 ? design_->w : weighted_[t - 1]; }

  const ExpandedDesign* design_;
  WorkingCorrelation structure_;
  Options options_;
  std::vector<Matrix> bases_;
  std::vector<Matrix> weighted_;
  Matrix jac_;
  bool gram_route_ = false;
  Matrix cross_;      // N x N: sum_t Z_t Z_t^T, Z_t = weighted_rows(t)
  Matrix resid_jac_;  // N x d: sum_t Z_t J_t, so row i of Phi^T J is r_i^T (block i)
};

}  // namespace sgqif
