#include "sgqif/screen.hpp"

#include "sgqif/error.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace sgqif {

double wald_p_value(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

ScreenReport marginal_screen(const LongitudinalDataset& data, double cutoff) {
  require_valid(data);
  if (!(cutoff > 0.0 && cutoff <= 1.0)) reject("screening cutoff must lie in (0, 1]");
  const int q = data.q;
  const Index rows = data.total_observed();
  const Index cols = 2 * (q + 1);

  // Fixed columns (1, E) and the per-row environment values.
  Matrix base(rows, q + 1);
  Vector y(rows);
  std::vector<int> subject_of(rows);
  Index r = 0;
  for (int i = 0; i < data.n; ++i)
    for (int j = 0; j < data.k; ++j) {
      if (!data.observed(i, j)) continue;
      base(r, 0) = 1.0;
      for (int u = 0; u < q; ++u) base(r, 1 + u) = data.e(i, j, u);
      y(r) = data.y(i, j);
      subject_of[r] = i;
      ++r;
    }

  ScreenReport report;
  report.cutoff = cutoff;
  report.min_p.assign(data.p, 1.0);
  const double clusters = static_cast<double>(data.n);
  const double small_sample = clusters > 1.0 ? clusters / (clusters - 1.0) : 1.0;

  Matrix x(rows, cols);
  x.leftCols(q + 1) = base;
  for (int v = 0; v < data.p; ++v) {
    for (Index a = 0; a < rows; ++a) {
      const double g = data.gen(subject_of[a], v);
      x(a, q + 1) = g;
      for (int u = 0; u < q; ++u) x(a, q + 2 + u) = base(a, 1 + u) * g;
    }
    const auto gcol = x.col(q + 1);
    if ((gcol.array() == gcol(0)).all()) {
      report.warnings.push_back("x" + std::to_string(v + 1) + " is constant; marginal effect not identifiable");
      continue;
    }
    const Matrix bread = x.transpose() * x;
    const Eigen::LDLT<Matrix> ldlt(bread);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-12 * ldlt.vectorD().maxCoeff()) {
      report.warnings.push_back("x" + std::to_string(v + 1) + " gives a singular marginal design");
      continue;
    }
    const Vector coef = ldlt.solve(x.transpose() * y);
    const Vector resid = y - x * coef;

    Matrix meat = Matrix::Zero(cols, cols);
    Vector cluster_score = Vector::Zero(cols);
    for (Index a = 0; a < rows; ++a) {
      cluster_score.noalias() += x.row(a).transpose() * resid(a);
      if (a + 1 == rows || subject_of[a + 1] != subject_of[a]) {
        meat.selfadjointView<Eigen::Lower>().rankUpdate(cluster_score);
        cluster_score.setZero();
      }
    }
    const Matrix inv_bread = ldlt.solve(Matrix::Identity(cols, cols));
    const Matrix cov = small_sample * inv_bread * meat.selfadjointView<Eigen::Lower>() * inv_bread;

    double best = 1.0;
    for (Index c = q + 1; c < cols; ++c) {
      const double var = cov(c, c);
      const double pv = var > 0.0 ? wald_p_value(coef(c) / std::sqrt(var)) : 1.0;
      best = std::min(best, pv);
    }
    report.min_p[v] = best;
    if (best < cutoff) report.kept.push_back(v);
  }
  return report;
}

}  // namespace sgqif
