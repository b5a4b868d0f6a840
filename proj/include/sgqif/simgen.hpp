#pragma once

#include "sgqif/dataset.hpp"

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace sgqif {

using Rng = std::mt19937_64;

// Independent stream for (master seed, replicate, stream); identical on every
// run and independent of thread scheduling.
Rng make_rng(std::uint64_t seed, std::uint64_t replicate, std::uint64_t stream);

enum class Scenario { GeneExpressionAr1, DichotomizedSnp, LdSnp };

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view text);

struct ScenarioConfig {
  Scenario scenario = Scenario::GeneExpressionAr1;
  int n = 400;
  int k = 5;
  int p = 200;
  int q = 5;
  double rho_x = 0.8;     // AR-1 correlation among covariates
  double tau = 0.8;       // exchangeable error correlation
  double maf = 0.3;       // LdSnp only
  double r = 0.3;         // LdSnp only: pairwise LD correlation
  int n_true = 25;        // nonzero genetic main + interaction effects
  double coef_lo = 0.3;
  double coef_hi = 0.7;
  bool time_varying_env = false;
  double missing_fraction = 0.0;  // share of time points deleted at random
  std::uint64_t seed = 1;

  void validate() const;
};

struct HaplotypeFrequencies {
  double delta = 0.0;
  double p_ab_upper = 0.0;  // p_AB
  double p_a_b = 0.0;       // p_Ab
  double p_ab_mixed = 0.0;  // p_aB
  double p_ab_lower = 0.0;  // p_ab

  // delta = r sqrt(qA (1 - qA) qB (1 - qB)). Rejects negative frequencies.
  static HaplotypeFrequencies from_ld(double maf_a, double maf_b, double r);
};

struct Covariates {
  Matrix env;  // (n*k) x q, row i*k + j
  Matrix gen;  // n x p
};

// Rows are draws from N(0, AR-1(rho)) with unit marginal variance.
Matrix ar1_normal(int rows, int cols, double rho, Rng& rng);

// Genotype matrix (minor allele counts) with HWE at the first locus and each
// next locus drawn from its conditional genotype distribution given the previous.
Matrix gen_ld_snps(const ScenarioConfig& config, Rng& rng);

Covariates gen_covariates(const ScenarioConfig& config, Rng& rng);

struct SimulatedTruth {
  CoefficientLayout layout;
  Vector beta_true;
  std::vector<int> true_main;
  std::vector<std::pair<int, int>> true_inter;
  LongitudinalDataset dataset;
};

// Coefficients: intercept and E effects plus n_true genetic effects placed as
// one whole group, partial groups, one main-only and one interaction-only
// group; magnitudes Uniform(coef_lo, coef_hi).
SimulatedTruth gen_coefficients(const ScenarioConfig& config, Rng& rng);

// Y = W beta + eps with eps_i ~ N(0, exchangeable(tau)).
LongitudinalDataset gen_response(const ScenarioConfig& config, const Covariates& cov, const Vector& beta, Rng& rng,
                                 bool zero_noise = false);

SimulatedTruth gen_truth_and_response(const ScenarioConfig& config, const Covariates& cov, Rng& rng);

// Deletes round(fraction * n * k) time points uniformly, never a subject's last one.
void drop_time_points(LongitudinalDataset& data, double fraction, Rng& rng);

// One training replicate with independent validation and test sets that share
// the true coefficients.
struct ReplicateData {
  SimulatedTruth truth;
  LongitudinalDataset validate;
  LongitudinalDataset test;
};

ReplicateData simulate_replicate(const ScenarioConfig& config, std::uint64_t replicate);

}  // namespace sgqif
