#pragma once

#include "sgqif/penalty.hpp"
#include "sgqif/qif.hpp"

#include <string>
#include <utility>
#include <vector>

namespace sgqif {

struct LassoResult {
  Vector beta;
  double lambda = 0.0;
  int sweeps = 0;
  bool converged = false;
  Index active = 0;  // nonzero penalized coordinates
};

// Cyclic coordinate descent for (1/2N)||y - X b||^2 + lambda sum_{penalized j} |b_j|.
LassoResult lasso_cd(const Matrix& x, const Vector& y, const std::vector<bool>& penalized, double lambda,
                     const Vector* warm_start = nullptr, int max_sweeps = 100000, double tol = 1e-10);

// Working-independence LASSO on the expanded design; intercept and E
// coefficients are unpenalized.
LassoResult init_lasso(const ExpandedDesign& design, double lambda_init, int max_sweeps = 100000, double tol = 1e-10);

// Smallest lambda on the L1 path (found by bisection in log lambda) whose
// solution has at most max_active nonzero penalized coordinates.
// max_active < 0 means n / 2.
LassoResult init_lasso_auto(const ExpandedDesign& design, Index max_active = -1);

struct NewtonOptions {
  int max_iter = 200;
  double tol = 1e-3;  // on mean |beta^(g+1) - beta^(g)|
  bool damping = true;
  int max_halvings = 30;
};

struct IterationRecord {
  double objective = 0.0;        // Q + n * penalty at the start of the iteration
  double frozen_objective = 0.0; // same objective with Omega held at the iterate, after the step
  double step = 1.0;
  double mean_abs_change = 0.0;
};

struct Selection {
  std::vector<int> main;                      // genetic factors v
  std::vector<std::pair<int, int>> inter;     // (v, u), u = environment factor
};

struct FitResult {
  Vector beta_hat;
  int iterations = 0;
  bool converged = false;
  double final_q = 0.0;
  double final_objective = 0.0;
  Selection selected;
  std::vector<IterationRecord> trace;
  std::string message;
};

inline constexpr double kDefaultSelectionThreshold = 1e-3;

// Penalized objective Q(beta) + n * penalty(beta). The factor n matches the
// n H scaling of the Newton update, so its fixed points are stationary here.
double penalized_objective(const QifEngine& engine, const PenaltySpec& spec, const Vector& beta,
                           const GroupMetric& metric = {});

// Damped Newton-Raphson with local quadratic approximation of the penalty:
// beta <- beta - step [V + n H]^-1 [P + n H beta].
// P is the gradient of Q (J carries the minus sign of d residual / d beta), so
// this is the usual + [V + nH]^-1 [S - nH beta] with score S = -P.
FitResult newton_fit(const QifEngine& engine, const PenaltySpec& spec, const Vector& beta0,
                     const NewtonOptions& options = {}, double threshold = kDefaultSelectionThreshold,
                     const GroupMetric& metric = {});

Selection threshold_select(const Vector& beta_hat, const CoefficientLayout& layout,
                           double threshold = kDefaultSelectionThreshold);

}  // namespace sgqif
