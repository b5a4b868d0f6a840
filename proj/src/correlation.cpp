#include "sgqif/correlation.hpp"

#include "sgqif/error.hpp"

#include <algorithm>

namespace sgqif {

std::string_view to_string(CorrelationKind kind) {
  switch (kind) {
    case CorrelationKind::Independence: return "independence";
    case CorrelationKind::Exchangeable: return "exchangeable";
    case CorrelationKind::Ar1: return "ar1";
  }
  return "unknown";
}

CorrelationKind parse_correlation(std::string_view text) {
  if (text == "independence" || text == "ind") return CorrelationKind::Independence;
  if (text == "exchangeable" || text == "exch") return CorrelationKind::Exchangeable;
  if (text == "ar1") return CorrelationKind::Ar1;
  reject("unknown working correlation '" + std::string(text) + "'");
}

std::vector<Matrix> basis_matrices(WorkingCorrelation structure, int k) {
  if (k < 1) reject("cluster size must be at least 1");
  std::vector<Matrix> out;
  out.push_back(Matrix::Identity(k, k));
  switch (structure.kind) {
    case CorrelationKind::Independence:
      break;
    case CorrelationKind::Exchangeable: {
      Matrix m = Matrix::Ones(k, k);
      m.diagonal().setZero();
      out.push_back(std::move(m));
      break;
    }
    case CorrelationKind::Ar1: {
      Matrix m = Matrix::Zero(k, k);
      for (int a = 0; a + 1 < k; ++a) {
        m(a, a + 1) = 1.0;
        m(a + 1, a) = 1.0;
      }
      out.push_back(std::move(m));
      break;
    }
  }
  return out;
}

ClusterTransform::ClusterTransform(int subject_, int k_, std::vector<int> kept_)
    : subject(subject_), k(k_), kept(std::move(kept_)) {
  if (kept.empty()) reject("cluster transform keeps no time points");
  for (std::size_t a = 0; a < kept.size(); ++a) {
    if (kept[a] < 0 || kept[a] >= k) reject("kept time point out of range: " + std::to_string(kept[a]));
    if (a > 0 && kept[a] <= kept[a - 1]) reject("kept time points must be strictly ascending");
  }
}

ClusterTransform ClusterTransform::identity(int subject, int k) {
  std::vector<int> all(k);
  for (int j = 0; j < k; ++j) all[j] = j;
  return ClusterTransform(subject, k, std::move(all));
}

ClusterTransform ClusterTransform::from_mask(const LongitudinalDataset& data, int subject) {
  std::vector<int> kept;
  for (int j = 0; j < data.k; ++j)
    if (data.observed(subject, j)) kept.push_back(j);
  return ClusterTransform(subject, data.k, std::move(kept));
}

Vector apply_transform(const ClusterTransform& t, const Vector& v) {
  if (v.size() != t.k) reject("vector length does not match cluster size");
  return v(t.kept);
}

Matrix apply_transform(const ClusterTransform& t, const Matrix& a) {
  if (a.rows() != t.k || a.cols() != t.k) reject("matrix must be k x k");
  return a(t.kept, t.kept);
}

Matrix restrict_rows(const ClusterTransform& t, const Matrix& a) {
  if (a.rows() != t.k) reject("matrix row count does not match cluster size");
  return a(t.kept, Eigen::all);
}

}  // namespace sgqif
