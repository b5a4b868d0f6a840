#pragma once

#include "sgqif/dataset.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace sgqif {

enum class CorrelationKind { Independence, Exchangeable, Ar1 };

std::string_view to_string(CorrelationKind kind);
CorrelationKind parse_correlation(std::string_view text);

struct WorkingCorrelation {
  CorrelationKind kind = CorrelationKind::Exchangeable;

  // Number of basis matrices M_1..M_m.
  int basis_count() const { return kind == CorrelationKind::Independence ? 1 : 2; }
};

// M_1 = I_k; exchangeable adds the all-ones-off-diagonal matrix, AR-1 adds the
// first sub/super-diagonal indicator. The inverse working correlation is
// approximated by a linear combination of these.
std::vector<Matrix> basis_matrices(WorkingCorrelation structure, int k);

// Selection transform S_i: keeps the listed time points of a k-point cluster.
struct ClusterTransform {
  int subject = 0;
  int k = 0;
  std::vector<int> kept;  // ascending, 0-based, no duplicates

  ClusterTransform(int subject, int k, std::vector<int> kept);
  static ClusterTransform identity(int subject, int k);
  static ClusterTransform from_mask(const LongitudinalDataset& data, int subject);

  int size() const { return static_cast<int>(kept.size()); }
  bool is_identity() const { return size() == k; }
};

// S_i v: the kept entries.
Vector apply_transform(const ClusterTransform& t, const Vector& v);
// S_i A S_i^T: the kept rows and columns of a square k x k matrix.
Matrix apply_transform(const ClusterTransform& t, const Matrix& a);
// S_i W: the kept rows of a k x c matrix.
Matrix restrict_rows(const ClusterTransform& t, const Matrix& a);

}  // namespace sgqif
