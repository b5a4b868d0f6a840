#include "sgqif/qif.hpp"

#include "sgqif/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace sgqif {

Matrix ExtendedScore::omega_bar() const {
  const Index md = scores.rows();
  Matrix omega = Matrix::Zero(md, md);
  omega.selfadjointView<Eigen::Lower>().rankUpdate(scores, 1.0 / static_cast<double>(subjects()));
  return omega.selfadjointView<Eigen::Lower>();
}

namespace {

struct GramWhitening {
  Matrix coef;  // rank x n; F = coef * Phi^T
  Index rank = 0;
  double largest_eigenvalue = 0.0;  // of Omega_bar
};

// Omega = Phi Phi^T / n has the same nonzero spectrum as the n x n Gram
// matrix Phi^T Phi / n. With Phi^T Phi = V G V^T the pseudo-inverse is
// n Phi V G^-2 V^T Phi^T, i.e. F = sqrt(n) G^-1 V^T Phi^T.
GramWhitening gram_whitening(const Matrix& gram, double rel_cutoff) {
  const Index n = gram.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw Error(ErrorKind::NonFinite, "eigendecomposition of Gram matrix failed");
  const Vector& g = eig.eigenvalues();
  const double n_d = static_cast<double>(n);
  GramWhitening out;
  out.largest_eigenvalue = g(n - 1) / n_d;
  if (!(out.largest_eigenvalue > 0.0)) throw Error(ErrorKind::RankZero, "moment matrix Omega is zero");
  const double cut = rel_cutoff * g(n - 1);
  Index first = 0;
  while (first < n && g(first) <= cut) ++first;
  out.rank = n - first;
  const Vector scale = g.tail(out.rank).cwiseInverse() * std::sqrt(n_d);
  out.coef = scale.asDiagonal() * eig.eigenvectors().rightCols(out.rank).transpose();
  return out;
}

}  // namespace

OmegaPseudoInverse omega_pseudo_inverse(const ExtendedScore& score, double rel_cutoff) {
  const Index md = score.scores.rows();
  const Index n = score.subjects();
  if (n == 0) throw Error(ErrorKind::RankZero, "no subjects in extended score");
  OmegaPseudoInverse out;

  if (md <= n) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(score.omega_bar());
    if (eig.info() != Eigen::Success) throw Error(ErrorKind::NonFinite, "eigendecomposition of Omega failed");
    const Vector& lam = eig.eigenvalues();
    out.largest_eigenvalue = lam(md - 1);
    if (!(out.largest_eigenvalue > 0.0)) throw Error(ErrorKind::RankZero, "moment matrix Omega is zero");
    const double cut = rel_cutoff * out.largest_eigenvalue;
    Index first = 0;
    while (first < md && lam(first) <= cut) ++first;
    out.rank = md - first;
    out.factor = (lam.tail(out.rank).cwiseSqrt().cwiseInverse()).asDiagonal() *
                 eig.eigenvectors().rightCols(out.rank).transpose();
    return out;
  }

  Matrix gram = Matrix::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(score.scores.transpose());
  const GramWhitening gw = gram_whitening(gram.selfadjointView<Eigen::Lower>(), rel_cutoff);
  out.rank = gw.rank;
  out.largest_eigenvalue = gw.largest_eigenvalue;
  out.factor = gw.coef * score.scores.transpose();
  return out;
}

double qif_objective(const ExtendedScore& score, const OmegaPseudoInverse& pinv) {
  return (pinv.factor * score.phi_bar).squaredNorm();
}

double qif_objective(const ExtendedScore& score) { return qif_objective(score, omega_pseudo_inverse(score)); }

namespace {

Matrix symmetric_gram(const Matrix& a, double alpha) {
  Matrix out = Matrix::Zero(a.cols(), a.cols());
  out.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose(), alpha);
  return out.selfadjointView<Eigen::Lower>();
}

}  // namespace

QifDerivatives qif_derivatives(const ExtendedScore& score, const OmegaPseudoInverse& pinv, const Matrix& jac) {
  const Matrix fj = pinv.factor * jac;
  const Vector fphi = pinv.factor * score.phi_bar;
  return {2.0 * (fj.transpose() * fphi), symmetric_gram(fj, 2.0)};
}

QifEngine::QifEngine(const ExpandedDesign& design, WorkingCorrelation structure)
    : QifEngine(design, structure, Options{}) {}

QifEngine::QifEngine(const ExpandedDesign& design, WorkingCorrelation structure, Options options)
    : design_(&design), structure_(structure), options_(options) {
  if (design.n < 1) reject("QIF engine needs at least one subject");
  bases_ = basis_matrices(structure, design.k);
  const Index d = design.d();
  const double inv_n = 1.0 / static_cast<double>(design.n);

  for (std::size_t t = 1; t < bases_.size(); ++t) {
    Matrix z(design.rows(), d);
    for (int i = 0; i < design.n; ++i) {
      const Index rows = design.rows_of(i);
      if (rows == 0) continue;
      if (design.fully_observed(i) && !options_.transform_complete_subjects) {
        z.middleRows(design.offset[i], rows).noalias() = bases_[t] * design.subject_w(i);
      } else {
        const ClusterTransform s(i, design.k, design.kept_times[i]);
        z.middleRows(design.offset[i], rows).noalias() = apply_transform(s, bases_[t]) * design.subject_w(i);
      }
    }
    weighted_.push_back(std::move(z));
  }

  jac_.resize(moment_dim(), d);
  jac_.topRows(d) = symmetric_gram(design.w, -inv_n);
  for (std::size_t t = 1; t < bases_.size(); ++t) {
    jac_.middleRows(static_cast<Index>(t) * d, d).noalias() = -inv_n * (design.w.transpose() * weighted_[t - 1]);
  }

  gram_route_ = options_.gram_shortcut && moment_dim() > design.n;
  if (gram_route_) {
    const Index rows = design.rows();
    cross_ = Matrix::Zero(rows, rows);
    resid_jac_ = Matrix::Zero(rows, d);
    for (int t = 0; t < basis_count(); ++t) {
      const Matrix& z = weighted_rows(t);
      cross_.selfadjointView<Eigen::Lower>().rankUpdate(z);
      resid_jac_.noalias() += z * jac_.middleRows(static_cast<Index>(t) * d, d);
    }
    cross_ = cross_.selfadjointView<Eigen::Lower>();
  }
}

ExtendedScore QifEngine::extended_score(const Vector& beta) const {
  const ExpandedDesign& des = *design_;
  const Index d = des.d();
  if (beta.size() != d) reject("beta length does not match design dimension");
  const Vector resid = des.response - des.w * beta;

  ExtendedScore out;
  out.scores.resize(moment_dim(), des.n);
  for (int t = 0; t < basis_count(); ++t) {
    const Matrix& z = weighted_rows(t);
    for (int i = 0; i < des.n; ++i) {
      const Index rows = des.rows_of(i);
      out.scores.col(i).segment(static_cast<Index>(t) * d, d).noalias() =
          z.middleRows(des.offset[i], rows).transpose() * resid.segment(des.offset[i], rows);
    }
  }
  out.phi_bar = out.scores.rowwise().mean();
  return out;
}

QifEvaluation QifEngine::evaluate(const Vector& beta) const {
  QifEvaluation ev;
  ev.score = extended_score(beta);
  if (!ev.score.scores.allFinite()) throw Error(ErrorKind::NonFinite, "extended score is not finite");
  if (!gram_route_) {
    const OmegaPseudoInverse pinv = omega_pseudo_inverse(ev.score, options_.pinv_cutoff);
    ev.rank = pinv.rank;
    ev.largest_eigenvalue = pinv.largest_eigenvalue;
    ev.whitened_score = pinv.factor * ev.score.phi_bar;
    ev.whitened_jac = pinv.factor * jac_;
  } else {
    // phi_i = sum_t Z_ti^T r_i, so Phi^T Phi = R^T (sum_t Z_t Z_t^T) R and
    // Phi^T J = R^T (sum_t Z_t J_t) with R block-diagonal in the residuals.
    const ExpandedDesign& des = *design_;
    const int n = des.n;
    const Vector resid = des.response - des.w * beta;
    Matrix cross_r(des.rows(), n);
    for (int l = 0; l < n; ++l)
      cross_r.col(l).noalias() =
          cross_.middleCols(des.offset[l], des.rows_of(l)) * resid.segment(des.offset[l], des.rows_of(l));
    Matrix gram(n, n);
    Matrix phi_jac(n, des.d());
    for (int i = 0; i < n; ++i) {
      const auto r = resid.segment(des.offset[i], des.rows_of(i));
      gram.row(i).noalias() = r.transpose() * cross_r.middleRows(des.offset[i], des.rows_of(i));
      phi_jac.row(i).noalias() = r.transpose() * resid_jac_.middleRows(des.offset[i], des.rows_of(i));
    }
    gram = 0.5 * (gram + gram.transpose()).eval();
    const GramWhitening gw = gram_whitening(gram, options_.pinv_cutoff);
    ev.rank = gw.rank;
    ev.largest_eigenvalue = gw.largest_eigenvalue;
    // Phi^T phi_bar = Phi^T Phi 1 / n
    ev.whitened_score = gw.coef * (gram.rowwise().sum() / static_cast<double>(n));
    ev.whitened_jac = gw.coef * phi_jac;
  }
  ev.q_value = ev.whitened_score.squaredNorm();
  ev.p_vec = 2.0 * (ev.whitened_jac.transpose() * ev.whitened_score);
  ev.v_mat = symmetric_gram(ev.whitened_jac, 2.0);
  return ev;
}

}  // namespace sgqif
