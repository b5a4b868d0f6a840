#pragma once

#include "sgqif/dataset.hpp"

#include <string>
#include <vector>

namespace sgqif {

inline constexpr double kDefaultScreenCutoff = 0.005;

struct ScreenReport {
  double cutoff = kDefaultScreenCutoff;
  std::vector<double> min_p;  // per genetic factor, over its q+1 G-related coefficients
  std::vector<int> kept;      // factors with min_p < cutoff, ascending
  std::vector<std::string> warnings;
};

// Two-sided normal p-value for a Wald statistic.
double wald_p_value(double z);

// Marginal model per factor v: Y ~ 1 + E + X_v + E X_v fitted by pooled least
// squares; Wald tests use the subject-clustered sandwich variance.
ScreenReport marginal_screen(const LongitudinalDataset& data, double cutoff = kDefaultScreenCutoff);

}  // namespace sgqif
