#pragma once

#include "sgqif/dataset.hpp"

#include <string_view>
#include <vector>

namespace sgqif {

enum class PenaltyKind { SparseGroup, Group, Individual };

std::string_view to_string(PenaltyKind kind);
PenaltyKind parse_penalty(std::string_view text);

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::SparseGroup;
  double lambda1 = 0.0;  // group level
  double lambda2 = 0.0;  // individual level
  double gamma = 3.0;
  double epsilon = 1e-6;

  bool has_group_term() const { return kind != PenaltyKind::Individual; }
  bool has_individual_term() const { return kind != PenaltyKind::Group; }
  // Group tuning is scaled by sqrt(group size) in both H and the objective.
  double group_lambda(Index group_size) const;
  void validate() const;
};

// Minimax concave penalty rho(t; lambda, gamma), t >= 0.
double mcp(double t, double lambda, double gamma);
// rho'(t) = (lambda - t / gamma) 1{t <= gamma lambda}.
double mcp_deriv(double t, double lambda, double gamma);

double group_norm(const Eigen::Ref<const Vector>& eta);

// Norm used inside the group penalty. Identity metric gives the Euclidean
// norm; the empirical metric uses Sigma_v = Z_v^T Z_v / N from the design.
class GroupMetric {
 public:
  GroupMetric() = default;
  static GroupMetric empirical(const ExpandedDesign& design);

  bool is_identity() const { return sigma_.empty(); }
  double norm(int group, const Eigen::Ref<const Vector>& eta) const;

 private:
  std::vector<Matrix> sigma_;
};

// Diagonal of H: zero on the intercept and environment coefficients,
// group and individual MCP local-quadratic weights on each eta_v.
Vector assemble_h(const Vector& beta, const CoefficientLayout& layout, const PenaltySpec& spec,
                  const GroupMetric& metric = {});

// sum_v rho(||eta_v||; sqrt(q+1) lambda1) + sum_{v,u} rho(|eta_vu|; lambda2), per kind.
double penalty_value(const Vector& beta, const CoefficientLayout& layout, const PenaltySpec& spec,
                     const GroupMetric& metric = {});

}  // namespace sgqif
