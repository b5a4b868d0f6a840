#include "sgqif/penalty.hpp"

#include "sgqif/error.hpp"

#include <cmath>

namespace sgqif {

std::string_view to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::SparseGroup: return "sparse-group";
    case PenaltyKind::Group: return "group";
    case PenaltyKind::Individual: return "individual";
  }
  return "unknown";
}

PenaltyKind parse_penalty(std::string_view text) {
  if (text == "sparse-group" || text == "sg") return PenaltyKind::SparseGroup;
  if (text == "group" || text == "g") return PenaltyKind::Group;
  if (text == "individual" || text == "i") return PenaltyKind::Individual;
  reject("unknown penalty kind '" + std::string(text) + "'");
}

double PenaltySpec::group_lambda(Index group_size) const {
  return std::sqrt(static_cast<double>(group_size)) * lambda1;
}

void PenaltySpec::validate() const {
  if (!(gamma > 1.0)) reject("MCP gamma must exceed 1");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) reject("tuning parameters must be non-negative");
  if (!(epsilon > 0.0)) reject("epsilon must be positive");
}

double mcp(double t, double lambda, double gamma) {
  if (!(t >= 0.0)) reject("mcp argument must be non-negative");
  if (t <= gamma * lambda) return lambda * t - t * t / (2.0 * gamma);
  return 0.5 * gamma * lambda * lambda;
}

double mcp_deriv(double t, double lambda, double gamma) {
  if (!(t >= 0.0)) reject("mcp_deriv argument must be non-negative");
  return t <= gamma * lambda ? lambda - t / gamma : 0.0;
}

double group_norm(const Eigen::Ref<const Vector>& eta) { return eta.norm(); }

GroupMetric GroupMetric::empirical(const ExpandedDesign& design) {
  GroupMetric m;
  const double rows = static_cast<double>(design.rows());
  for (const auto& g : design.layout.groups) {
    const auto z = design.w.middleCols(g.start, g.size);
    m.sigma_.push_back((z.transpose() * z) / rows);
  }
  return m;
}

double GroupMetric::norm(int group, const Eigen::Ref<const Vector>& eta) const {
  if (sigma_.empty()) return group_norm(eta);
  return std::sqrt(std::max(0.0, eta.dot(sigma_[group] * eta)));
}

Vector assemble_h(const Vector& beta, const CoefficientLayout& layout, const PenaltySpec& spec,
                  const GroupMetric& metric) {
  if (beta.size() != layout.d) reject("beta length does not match the coefficient layout");
  Vector h = Vector::Zero(layout.d);
  for (const auto& g : layout.groups) {
    const auto eta = beta.segment(g.start, g.size);
    if (spec.has_group_term()) {
      const double norm = metric.norm(g.factor, eta);
      const double w = mcp_deriv(norm, spec.group_lambda(g.size), spec.gamma) / (spec.epsilon + norm);
      h.segment(g.start, g.size).setConstant(w);
    }
    if (spec.has_individual_term()) {
      for (Index u = 0; u < g.size; ++u) {
        const double t = std::abs(eta(u));
        h(g.start + u) += mcp_deriv(t, spec.lambda2, spec.gamma) / (spec.epsilon + t);
      }
    }
  }
  return h;
}

double penalty_value(const Vector& beta, const CoefficientLayout& layout, const PenaltySpec& spec,
                     const GroupMetric& metric) {
  if (beta.size() != layout.d) reject("beta length does not match the coefficient layout");
  double total = 0.0;
  for (const auto& g : layout.groups) {
    const auto eta = beta.segment(g.start, g.size);
    if (spec.has_group_term()) total += mcp(metric.norm(g.factor, eta), spec.group_lambda(g.size), spec.gamma);
    if (spec.has_individual_term()) {
      for (Index u = 0; u < g.size; ++u) total += mcp(std::abs(eta(u)), spec.lambda2, spec.gamma);
    }
  }
  return total;
}

}  // namespace sgqif
