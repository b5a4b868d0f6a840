#include "sgqif/solver.hpp"

#include "sgqif/error.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sgqif {

namespace {

double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

std::vector<bool> penalized_mask(const CoefficientLayout& layout) {
  std::vector<bool> mask(layout.d, true);
  for (Index j = 0; j < layout.unpenalized_count(); ++j) mask[j] = false;
  return mask;
}

Index count_active(const Vector& beta, const std::vector<bool>& penalized) {
  Index count = 0;
  for (Index j = 0; j < beta.size(); ++j)
    if (penalized[j] && beta(j) != 0.0) ++count;
  return count;
}

}  // namespace

namespace {

// Least-squares sufficient statistics: gram = X^T X / N, cross = X^T y / N.
struct LassoProblem {
  Matrix gram;
  Vector cross;
  std::vector<bool> penalized;
};

LassoProblem make_problem(const Matrix& x, const Vector& y, std::vector<bool> penalized) {
  const Index rows = x.rows(), d = x.cols();
  if (y.size() != rows) reject("lasso: response length does not match design");
  if (static_cast<Index>(penalized.size()) != d) reject("lasso: penalty mask length does not match design");
  const double inv_rows = rows > 0 ? 1.0 / static_cast<double>(rows) : 0.0;
  LassoProblem prob;
  prob.gram = Matrix::Zero(d, d);
  prob.gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), inv_rows);
  prob.gram = prob.gram.selfadjointView<Eigen::Lower>();
  prob.cross = x.transpose() * y * inv_rows;
  prob.penalized = std::move(penalized);
  return prob;
}

// Cyclic coordinate descent with covariance updates; gb tracks gram * beta.
LassoResult solve_lasso(const LassoProblem& prob, double lambda, const Vector* warm_start, int max_sweeps, double tol) {
  if (!(lambda >= 0.0)) reject("lasso: lambda must be non-negative");
  const Index d = prob.cross.size();
  LassoResult out;
  out.lambda = lambda;
  out.beta = warm_start ? *warm_start : Vector::Zero(d);
  Vector gb = prob.gram * out.beta;

  auto update = [&](Index j) {
    const double scale = prob.gram(j, j);
    if (scale <= 0.0) return 0.0;
    const double old = out.beta(j);
    const double z = prob.cross(j) - gb(j) + scale * old;
    const double fresh = prob.penalized[j] ? soft_threshold(z, lambda) / scale : z / scale;
    if (fresh == old) return 0.0;
    gb.noalias() += (fresh - old) * prob.gram.col(j);
    out.beta(j) = fresh;
    return std::abs(fresh - old) * std::sqrt(scale);
  };

  std::vector<Index> active;
  while (out.sweeps < max_sweeps) {
    double change = 0.0;
    for (Index j = 0; j < d; ++j) change = std::max(change, update(j));
    ++out.sweeps;
    if (change < tol) {
      out.converged = true;
      break;
    }
    active.clear();
    for (Index j = 0; j < d; ++j)
      if (out.beta(j) != 0.0 || !prob.penalized[j]) active.push_back(j);
    while (out.sweeps < max_sweeps) {
      double inner = 0.0;
      for (Index j : active) inner = std::max(inner, update(j));
      ++out.sweeps;
      if (inner < tol) break;
    }
  }
  out.active = count_active(out.beta, prob.penalized);
  return out;
}

}  // namespace

LassoResult lasso_cd(const Matrix& x, const Vector& y, const std::vector<bool>& penalized, double lambda,
                     const Vector* warm_start, int max_sweeps, double tol) {
  return solve_lasso(make_problem(x, y, penalized), lambda, warm_start, max_sweeps, tol);
}

LassoResult init_lasso(const ExpandedDesign& design, double lambda_init, int max_sweeps, double tol) {
  const LassoResult res = lasso_cd(design.w, design.response, penalized_mask(design.layout), lambda_init, nullptr,
                                   max_sweeps, tol);
  if (!res.converged) {
    std::ostringstream os;
    os << "LASSO initializer did not converge after " << res.sweeps << " sweeps (lambda " << lambda_init << ")";
    throw Error(ErrorKind::NoConvergence, os.str());
  }
  return res;
}

LassoResult init_lasso_auto(const ExpandedDesign& design, Index max_active) {
  if (max_active < 0) max_active = design.n / 2;
  const LassoProblem prob = make_problem(design.w, design.response, penalized_mask(design.layout));
  constexpr int kMaxSweeps = 100000;
  constexpr double kTol = 1e-9;

  // lambda_max: every penalized coordinate is zero at and above it.
  LassoResult best = solve_lasso(prob, std::numeric_limits<double>::infinity(), nullptr, kMaxSweeps, kTol);
  const Vector grad = prob.cross - prob.gram * best.beta;
  double lambda_max = 0.0;
  for (Index j = 0; j < design.d(); ++j)
    if (prob.penalized[j]) lambda_max = std::max(lambda_max, std::abs(grad(j)));
  best.lambda = lambda_max;
  if (lambda_max <= 0.0) return best;

  // Walk down a geometric path until too many coefficients enter, then bisect the bracket.
  double hi = std::log(lambda_max);  // feasible: active <= max_active
  double lo = hi;
  const double floor = std::log(lambda_max * 1e-4);
  Vector warm = best.beta;
  while (true) {
    lo = std::max(lo - std::log(2.0), floor);
    LassoResult trial = solve_lasso(prob, std::exp(lo), &warm, kMaxSweeps, kTol);
    if (trial.active > max_active) break;
    hi = lo;
    best = std::move(trial);
    warm = best.beta;
    if (lo <= floor) return best;
  }
  while (hi - lo > 1e-2) {
    const double mid = 0.5 * (lo + hi);
    LassoResult trial = solve_lasso(prob, std::exp(mid), &best.beta, kMaxSweeps, kTol);
    if (trial.active <= max_active) {
      hi = mid;
      best = std::move(trial);
    } else {
      lo = mid;
    }
  }
  return best;
}

double penalized_objective(const QifEngine& engine, const PenaltySpec& spec, const Vector& beta,
                           const GroupMetric& metric) {
  const double n = static_cast<double>(engine.subjects());
  return engine.objective(beta) + n * penalty_value(beta, engine.design().layout, spec, metric);
}

namespace {

Vector solve_newton_system(Matrix a, const Vector& rhs) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) {
    Vector x = llt.solve(rhs);
    if (x.allFinite()) return x;
  }
  const double ridge = 1e-10 * a.trace() / static_cast<double>(a.rows());
  a.diagonal().array() += ridge;
  Eigen::LDLT<Matrix> ldlt(a);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    Vector x = ldlt.solve(rhs);
    if (x.allFinite()) return x;
  }
  throw Error(ErrorKind::Singular, "Newton system is singular after ridge");
}

}  // namespace

FitResult newton_fit(const QifEngine& engine, const PenaltySpec& spec, const Vector& beta0,
                     const NewtonOptions& options, double threshold, const GroupMetric& metric) {
  spec.validate();
  const CoefficientLayout& layout = engine.design().layout;
  if (beta0.size() != layout.d) reject("initial beta length does not match design dimension");
  if (options.max_iter < 1) reject("max_iter must be at least 1");
  const double n = static_cast<double>(engine.subjects());

  FitResult fit;
  Vector beta = beta0;
  for (int g = 0; g < options.max_iter; ++g) {
    const QifEvaluation ev = engine.evaluate(beta);
    const Vector h = assemble_h(beta, layout, spec, metric);
    const double start = ev.q_value + n * penalty_value(beta, layout, spec, metric);
    if (!std::isfinite(start)) throw Error(ErrorKind::NonFinite, "penalized objective is not finite");

    Matrix a = ev.v_mat;
    a.diagonal() += n * h;
    const Vector rhs = -(ev.p_vec + n * h.cwiseProduct(beta));
    const Vector delta = solve_newton_system(std::move(a), rhs);

    double step = 1.0;
    double after = ev.frozen_objective(delta) + n * penalty_value(beta + delta, layout, spec, metric);
    bool accepted = true;
    if (options.damping) {
      const double slack = 1e-12 * std::max(1.0, std::abs(start));
      int halvings = 0;
      while (!(after <= start + slack)) {
        if (++halvings > options.max_halvings) {
          accepted = false;
          break;
        }
        step *= 0.5;
        after = ev.frozen_objective(step * delta) + n * penalty_value(beta + step * delta, layout, spec, metric);
      }
    }
    ++fit.iterations;
    if (!accepted) {
      const double full_change = delta.cwiseAbs().mean();
      fit.trace.push_back({start, start, 0.0, 0.0});
      fit.converged = full_change < options.tol;
      fit.message = "step halving found no descent";
      break;
    }

    const Vector next = beta + step * delta;
    const double change = (next - beta).cwiseAbs().mean();
    fit.trace.push_back({start, after, step, change});
    beta = next;
    if (change < options.tol) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged && fit.message.empty()) fit.message = "reached max_iter";

  const ExtendedScore final_score = engine.extended_score(beta);
  fit.final_q = qif_objective(final_score);
  fit.final_objective = fit.final_q + n * penalty_value(beta, layout, spec, metric);
  if (!std::isfinite(fit.final_objective)) throw Error(ErrorKind::NonFinite, "final objective is not finite");
  fit.selected = threshold_select(beta, layout, threshold);
  fit.beta_hat = std::move(beta);
  return fit;
}

Selection threshold_select(const Vector& beta_hat, const CoefficientLayout& layout, double threshold) {
  if (beta_hat.size() != layout.d) reject("beta length does not match the coefficient layout");
  Selection sel;
  for (const auto& g : layout.groups) {
    if (std::abs(beta_hat(g.start)) > threshold) sel.main.push_back(g.factor);
    for (Index u = 1; u < g.size; ++u)
      if (std::abs(beta_hat(g.start + u)) > threshold) sel.inter.emplace_back(g.factor, static_cast<int>(u - 1));
  }
  return sel;
}

}  // namespace sgqif
