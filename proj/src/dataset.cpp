#include "sgqif/dataset.hpp"

#include "sgqif/error.hpp"

#include <cmath>
#include <sstream>

namespace sgqif {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid_input";
    case ErrorKind::RankZero: return "rank_zero";
    case ErrorKind::NonFinite: return "non_finite";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::NoConvergence: return "no_convergence";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

LongitudinalDataset LongitudinalDataset::zeros(int n, int k, int q, int p) {
  if (n < 0 || k < 0 || q < 0 || p < 0) reject("dataset dimensions must be non-negative");
  LongitudinalDataset d;
  d.n = n;
  d.k = k;
  d.q = q;
  d.p = p;
  d.y = Matrix::Zero(n, k);
  d.env = Matrix::Zero(static_cast<Index>(n) * k, q);
  d.gen = Matrix::Zero(n, p);
  d.observed = Mask::Constant(n, k, true);
  return d;
}

int LongitudinalDataset::observed_count(int i) const {
  return static_cast<int>(observed.row(i).count());
}

Index LongitudinalDataset::total_observed() const { return observed.count(); }

std::string describe(const Violation& v) {
  std::ostringstream os;
  os << v.field;
  if (v.subject >= 0) {
    os << " subject " << v.subject;
    if (v.time >= 0) os << " time " << v.time;
  }
  os << ": " << v.message;
  return os.str();
}

std::vector<Violation> validate_dataset(const LongitudinalDataset& data) {
  std::vector<Violation> out;
  const Index n = data.n, k = data.k;
  if (data.n < 0 || data.k < 0 || data.q < 0 || data.p < 0) {
    out.push_back({-1, -1, "shape", "negative dimension"});
    return out;
  }
  bool shapes_ok = true;
  auto check_shape = [&](const char* field, Index rows, Index cols, Index want_rows, Index want_cols) {
    if (rows != want_rows || cols != want_cols) {
      std::ostringstream os;
      os << "expected " << want_rows << " x " << want_cols << ", got " << rows << " x " << cols;
      out.push_back({-1, -1, field, os.str()});
      shapes_ok = false;
    }
  };
  check_shape("y", data.y.rows(), data.y.cols(), n, k);
  check_shape("env", data.env.rows(), data.env.cols(), n * k, data.q);
  check_shape("gen", data.gen.rows(), data.gen.cols(), n, data.p);
  check_shape("observed", data.observed.rows(), data.observed.cols(), n, k);
  if (!shapes_ok) return out;

  for (int i = 0; i < data.n; ++i) {
    if (data.observed_count(i) == 0) {
      out.push_back({i, -1, "observed", "subject has no observed time points"});
      continue;
    }
    for (int v = 0; v < data.p; ++v) {
      if (!std::isfinite(data.gen(i, v))) {
        out.push_back({i, -1, "gen", "non-finite genetic factor x" + std::to_string(v + 1)});
      }
    }
    for (int j = 0; j < data.k; ++j) {
      if (!data.observed(i, j)) continue;
      if (!std::isfinite(data.y(i, j))) out.push_back({i, j, "y", "non-finite response"});
      for (int u = 0; u < data.q; ++u) {
        if (!std::isfinite(data.e(i, j, u))) {
          out.push_back({i, j, "env", "non-finite environment factor e" + std::to_string(u + 1)});
        }
      }
    }
  }
  return out;
}

void require_valid(const LongitudinalDataset& data) {
  const auto violations = validate_dataset(data);
  if (violations.empty()) return;
  std::ostringstream os;
  os << violations.size() << " dataset violation(s)";
  const std::size_t shown = std::min<std::size_t>(violations.size(), 5);
  for (std::size_t a = 0; a < shown; ++a) os << "; " << describe(violations[a]);
  reject(os.str());
}

LongitudinalDataset standardize(const LongitudinalDataset& data) {
  require_valid(data);
  LongitudinalDataset out = data;
  for (int u = 0; u < data.q; ++u) {
    double sum = 0.0, sq = 0.0;
    Index count = 0;
    for (int i = 0; i < data.n; ++i)
      for (int j = 0; j < data.k; ++j)
        if (data.observed(i, j)) {
          sum += data.e(i, j, u);
          ++count;
        }
    const double mean = count > 0 ? sum / count : 0.0;
    for (int i = 0; i < data.n; ++i)
      for (int j = 0; j < data.k; ++j)
        if (data.observed(i, j)) sq += (data.e(i, j, u) - mean) * (data.e(i, j, u) - mean);
    const double sd = count > 1 ? std::sqrt(sq / (count - 1)) : 0.0;
    for (int i = 0; i < data.n; ++i)
      for (int j = 0; j < data.k; ++j) {
        double& x = out.e(i, j, u);
        x -= mean;
        if (sd > 0.0) x /= sd;
      }
  }
  for (int v = 0; v < data.p; ++v) {
    auto col = out.gen.col(v);
    const double mean = col.mean();
    col.array() -= mean;
    const double sd = data.n > 1 ? std::sqrt(col.squaredNorm() / (data.n - 1)) : 0.0;
    if (sd > 0.0) col /= sd;
  }
  return out;
}

LongitudinalDataset subset_subjects(const LongitudinalDataset& data, const std::vector<int>& subjects) {
  LongitudinalDataset out = LongitudinalDataset::zeros(static_cast<int>(subjects.size()), data.k, data.q, data.p);
  for (std::size_t a = 0; a < subjects.size(); ++a) {
    const int i = subjects[a];
    if (i < 0 || i >= data.n) reject("subject index out of range: " + std::to_string(i));
    out.y.row(a) = data.y.row(i);
    out.gen.row(a) = data.gen.row(i);
    out.observed.row(a) = data.observed.row(i);
    out.env.middleRows(static_cast<Index>(a) * data.k, data.k) = data.env.middleRows(static_cast<Index>(i) * data.k, data.k);
  }
  return out;
}

LongitudinalDataset subset_genes(const LongitudinalDataset& data, const std::vector<int>& genes) {
  LongitudinalDataset out = data;
  out.p = static_cast<int>(genes.size());
  out.gen.resize(data.n, out.p);
  for (std::size_t a = 0; a < genes.size(); ++a) {
    const int v = genes[a];
    if (v < 0 || v >= data.p) reject("genetic factor index out of range: " + std::to_string(v));
    out.gen.col(a) = data.gen.col(v);
  }
  return out;
}

CoefficientLayout::CoefficientLayout(int q_, int p_) : q(q_), p(p_) {
  if (q < 0 || p < 0) reject("layout dimensions must be non-negative");
  d = 1 + q + static_cast<Index>(p) * (q + 1);
  groups.reserve(p);
  for (int v = 0; v < p; ++v) {
    groups.push_back({v, 1 + q + static_cast<Index>(v) * (q + 1), q + 1});
  }
}

ExpandedDesign expand_design(const LongitudinalDataset& data) {
  require_valid(data);
  ExpandedDesign out;
  out.n = data.n;
  out.k = data.k;
  out.layout = CoefficientLayout(data.q, data.p);
  const Index rows = data.total_observed();
  const int q = data.q;
  out.w.resize(rows, out.layout.d);
  out.response.resize(rows);
  out.offset.assign(data.n + 1, 0);
  out.kept_times.resize(data.n);

  Index r = 0;
  for (int i = 0; i < data.n; ++i) {
    out.offset[i] = r;
    for (int j = 0; j < data.k; ++j) {
      if (!data.observed(i, j)) continue;
      out.kept_times[i].push_back(j);
      auto row = out.w.row(r);
      row(0) = 1.0;
      for (int u = 0; u < q; ++u) row(1 + u) = data.e(i, j, u);
      for (int v = 0; v < data.p; ++v) {
        const double x = data.gen(i, v);
        const Index s = out.layout.groups[v].start;
        row(s) = x;
        for (int u = 0; u < q; ++u) row(s + 1 + u) = data.e(i, j, u) * x;
      }
      out.response(r) = data.y(i, j);
      ++r;
    }
  }
  out.offset[data.n] = r;
  return out;
}

}  // namespace sgqif
