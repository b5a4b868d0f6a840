#include "sgqif/simgen.hpp"

#include "sgqif/error.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sgqif {

Rng make_rng(std::uint64_t seed, std::uint64_t replicate, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(replicate >> 32),
                    static_cast<std::uint32_t>(stream), 0x5347u};
  return Rng(seq);
}

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::GeneExpressionAr1: return "gene-expression";
    case Scenario::DichotomizedSnp: return "dichotomized-snp";
    case Scenario::LdSnp: return "ld-snp";
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view text) {
  if (text == "1" || text == "gene-expression") return Scenario::GeneExpressionAr1;
  if (text == "2" || text == "dichotomized-snp") return Scenario::DichotomizedSnp;
  if (text == "3" || text == "ld-snp") return Scenario::LdSnp;
  reject("unknown scenario '" + std::string(text) + "'");
}

void ScenarioConfig::validate() const {
  if (n < 1 || k < 1 || p < 0 || q < 0) reject("scenario dimensions must be positive");
  if (!(rho_x > -1.0 && rho_x < 1.0)) reject("rho_x must lie in (-1, 1)");
  if (!(tau > -1.0 && tau < 1.0)) reject("tau must lie in (-1, 1)");
  if (k > 1 && !(tau > -1.0 / (k - 1))) reject("tau too negative for a positive definite exchangeable matrix");
  if (!(maf > 0.0 && maf <= 0.5)) reject("maf must lie in (0, 0.5]");
  if (n_true < 0 || static_cast<long>(n_true) > static_cast<long>(p) * (q + 1))
    reject("n_true exceeds the number of genetic coefficients p(q+1)");
  if (!(coef_lo <= coef_hi)) reject("coefficient range is empty");
  if (!(missing_fraction >= 0.0 && missing_fraction < 1.0)) reject("missing_fraction must lie in [0, 1)");
  if (scenario == Scenario::LdSnp) HaplotypeFrequencies::from_ld(maf, maf, r);
}

HaplotypeFrequencies HaplotypeFrequencies::from_ld(double qa, double qb, double r) {
  HaplotypeFrequencies h;
  h.delta = r * std::sqrt(qa * (1.0 - qa) * qb * (1.0 - qb));
  h.p_ab_upper = qa * qb + h.delta;
  h.p_ab_lower = (1.0 - qa) * (1.0 - qb) + h.delta;
  h.p_a_b = qa * (1.0 - qb) - h.delta;
  h.p_ab_mixed = (1.0 - qa) * qb - h.delta;
  for (double f : {h.p_ab_upper, h.p_ab_lower, h.p_a_b, h.p_ab_mixed})
    if (f < 0.0 || f > 1.0) reject("LD parameters give a haplotype frequency outside [0, 1]");
  return h;
}

Matrix ar1_normal(int rows, int cols, double rho, Rng& rng) {
  std::normal_distribution<double> z;
  const double innov = std::sqrt(1.0 - rho * rho);
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    double prev = 0.0;
    for (int c = 0; c < cols; ++c) {
      const double draw = z(rng);
      prev = c == 0 ? draw : rho * prev + innov * draw;
      out(i, c) = prev;
    }
  }
  return out;
}

namespace {

// Ranks of the column entries (0 = smallest); ties broken by position.
std::vector<int> column_ranks(const Eigen::Ref<const Vector>& col) {
  std::vector<int> order(col.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return col(a) < col(b); });
  std::vector<int> rank(col.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<int>(r);
  return rank;
}

int binomial_draw(int trials, double prob, Rng& rng) {
  std::bernoulli_distribution coin(prob);
  int count = 0;
  for (int t = 0; t < trials; ++t) count += coin(rng) ? 1 : 0;
  return count;
}

}  // namespace

Matrix gen_ld_snps(const ScenarioConfig& config, Rng& rng) {
  const auto hap = HaplotypeFrequencies::from_ld(config.maf, config.maf, config.r);
  const double qa = config.maf;
  // P(B | A) and P(B | a) for the next locus given the allele on the same haplotype.
  const double b_given_a = hap.p_ab_upper / qa;
  const double b_given_not_a = hap.p_ab_mixed / (1.0 - qa);
  std::discrete_distribution<int> hwe({(1.0 - qa) * (1.0 - qa), 2.0 * qa * (1.0 - qa), qa * qa});

  Matrix g(config.n, config.p);
  for (int i = 0; i < config.n; ++i) {
    int prev = 0;
    for (int v = 0; v < config.p; ++v) {
      int geno;
      if (v == 0) {
        geno = hwe(rng);
      } else {
        geno = binomial_draw(prev, b_given_a, rng) + binomial_draw(2 - prev, b_given_not_a, rng);
      }
      g(i, v) = geno;
      prev = geno;
    }
  }
  return g;
}

Covariates gen_covariates(const ScenarioConfig& config, Rng& rng) {
  config.validate();
  const int n = config.n, k = config.k, q = config.q;
  Covariates cov;
  cov.env.resize(static_cast<Index>(n) * k, q);
  if (q > 0) {
    Matrix draws = ar1_normal(config.time_varying_env ? n * k : n, q, config.rho_x, rng);
    // First environment factor: split at the empirical median.
    const auto rank = column_ranks(draws.col(0));
    const Index total = draws.rows();
    for (Index r = 0; r < total; ++r) draws(r, 0) = rank[r] >= total - total / 2 ? 1.0 : 0.0;
    if (config.time_varying_env) {
      cov.env = std::move(draws);
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) cov.env.row(static_cast<Index>(i) * k + j) = draws.row(i);
    }
  }

  switch (config.scenario) {
    case Scenario::GeneExpressionAr1:
      cov.gen = ar1_normal(n, config.p, config.rho_x, rng);
      break;
    case Scenario::DichotomizedSnp: {
      cov.gen = ar1_normal(n, config.p, config.rho_x, rng);
      // Cut each gene at its empirical 30th and 70th percentiles.
      const int low = static_cast<int>(std::lround(0.3 * n));
      const int high = static_cast<int>(std::lround(0.7 * n));
      for (int v = 0; v < config.p; ++v) {
        const auto rank = column_ranks(cov.gen.col(v));
        for (int i = 0; i < n; ++i) cov.gen(i, v) = rank[i] < low ? 0.0 : (rank[i] < high ? 1.0 : 2.0);
      }
      break;
    }
    case Scenario::LdSnp:
      cov.gen = gen_ld_snps(config, rng);
      break;
  }
  return cov;
}

SimulatedTruth gen_coefficients(const ScenarioConfig& config, Rng& rng) {
  config.validate();
  const int p = config.p, q = config.q;
  SimulatedTruth truth;
  truth.layout = CoefficientLayout(q, p);
  truth.beta_true = Vector::Zero(truth.layout.d);
  std::uniform_real_distribution<double> magnitude(config.coef_lo, config.coef_hi);
  for (Index j = 0; j < truth.layout.unpenalized_count(); ++j) truth.beta_true(j) = magnitude(rng);
  if (config.n_true == 0) return truth;

  // Roughly a quarter of the genetic effects are main effects.
  int n_main = q == 0 ? config.n_true : static_cast<int>(std::lround(0.24 * config.n_true));
  n_main = std::clamp(n_main, 0, std::min(p, config.n_true));
  int n_inter = config.n_true - n_main;
  while (n_inter > p * q) {
    ++n_main;
    --n_inter;
  }

  // Interactions per main-effect group: first group whole, one group main
  // only, the rest partial; leftover interactions go to interaction-only groups.
  std::vector<int> inter_count(n_main, 0);
  int left = n_inter;
  if (n_main > 0 && left > 0) {
    const int interaction_only_reserve = (n_main < p) ? 1 : 0;
    int budget = left - interaction_only_reserve;
    inter_count[0] = std::min(q, budget);
    budget -= inter_count[0];
    const int partial_groups = n_main >= 3 ? n_main - 2 : std::max(0, n_main - 1);
    for (int round = 0; budget > 0 && round < q; ++round) {
      bool placed = false;
      for (int gidx = 1; gidx <= partial_groups && budget > 0; ++gidx) {
        if (inter_count[gidx] < q - 1) {
          ++inter_count[gidx];
          --budget;
          placed = true;
        }
      }
      if (!placed) break;
    }
    left = budget + interaction_only_reserve;
  }
  std::vector<int> only_inter;
  while (left > 0) {
    const int take = std::min(q, left);
    only_inter.push_back(take);
    left -= take;
  }
  const int groups_needed = n_main + static_cast<int>(only_inter.size());
  if (groups_needed > p) {
    // Not enough factors for the pattern: fill existing groups to capacity.
    reject("cannot place the requested genetic effects across p factors");
  }

  std::vector<int> factors(p);
  std::iota(factors.begin(), factors.end(), 0);
  std::shuffle(factors.begin(), factors.end(), rng);
  factors.resize(groups_needed);

  auto place_interactions = [&](int v, int count) {
    std::vector<int> env(q);
    std::iota(env.begin(), env.end(), 0);
    std::shuffle(env.begin(), env.end(), rng);
    env.resize(count);
    std::sort(env.begin(), env.end());
    for (int u : env) truth.beta_true(truth.layout.interaction_index(v, u)) = magnitude(rng);
  };
  for (int gidx = 0; gidx < n_main; ++gidx) {
    const int v = factors[gidx];
    truth.beta_true(truth.layout.main_index(v)) = magnitude(rng);
    place_interactions(v, inter_count[gidx]);
  }
  for (std::size_t a = 0; a < only_inter.size(); ++a) place_interactions(factors[n_main + a], only_inter[a]);

  for (const auto& g : truth.layout.groups) {
    if (truth.beta_true(g.start) != 0.0) truth.true_main.push_back(g.factor);
    for (Index u = 1; u < g.size; ++u)
      if (truth.beta_true(g.start + u) != 0.0) truth.true_inter.emplace_back(g.factor, static_cast<int>(u - 1));
  }
  return truth;
}

LongitudinalDataset gen_response(const ScenarioConfig& config, const Covariates& cov, const Vector& beta, Rng& rng,
                                 bool zero_noise) {
  const int n = config.n, k = config.k, q = config.q, p = config.p;
  const CoefficientLayout layout(q, p);
  if (beta.size() != layout.d) reject("beta length does not match scenario dimension");
  LongitudinalDataset data = LongitudinalDataset::zeros(n, k, q, p);
  data.env = cov.env;
  data.gen = cov.gen;

  Matrix sigma = Matrix::Constant(k, k, config.tau);
  sigma.diagonal().setOnes();
  const Eigen::LLT<Matrix> chol(sigma);
  if (chol.info() != Eigen::Success) reject("exchangeable error covariance is not positive definite");
  const Matrix lower = chol.matrixL();
  std::normal_distribution<double> z;

  // eta_v . Z_ijv = X_iv (gamma_v + sum_u h_uv E_iju); accumulate per time point.
  for (int i = 0; i < n; ++i) {
    Vector eps(k);
    for (int j = 0; j < k; ++j) eps(j) = z(rng);
    const Vector noise = zero_noise ? Vector::Zero(k) : Vector(lower * eps);
    for (int j = 0; j < k; ++j) {
      const auto e = data.env.row(static_cast<Index>(i) * k + j);
      double mu = beta(0) + (q > 0 ? e.dot(beta.segment(1, q)) : 0.0);
      for (const auto& g : layout.groups) {
        const auto eta = beta.segment(g.start, g.size);
        double slope = eta(0);
        if (q > 0) slope += e.dot(eta.tail(q));
        mu += slope * data.gen(i, g.factor);
      }
      data.y(i, j) = mu + noise(j);
    }
  }
  return data;
}

SimulatedTruth gen_truth_and_response(const ScenarioConfig& config, const Covariates& cov, Rng& rng) {
  SimulatedTruth truth = gen_coefficients(config, rng);
  truth.dataset = gen_response(config, cov, truth.beta_true, rng);
  return truth;
}

void drop_time_points(LongitudinalDataset& data, double fraction, Rng& rng) {
  if (!(fraction >= 0.0 && fraction < 1.0)) reject("missing fraction must lie in [0, 1)");
  const Index cells = static_cast<Index>(data.n) * data.k;
  Index target = static_cast<Index>(std::llround(fraction * static_cast<double>(cells)));
  std::vector<Index> order(cells);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (Index c : order) {
    if (target == 0) break;
    const int i = static_cast<int>(c / data.k), j = static_cast<int>(c % data.k);
    if (!data.observed(i, j) || data.observed_count(i) <= 1) continue;
    data.observed(i, j) = false;
    --target;
  }
}

ReplicateData simulate_replicate(const ScenarioConfig& config, std::uint64_t replicate) {
  config.validate();
  Rng coef_rng = make_rng(config.seed, replicate, 0);
  ReplicateData out;
  out.truth = gen_coefficients(config, coef_rng);

  auto draw = [&](std::uint64_t stream) {
    Rng rng = make_rng(config.seed, replicate, stream);
    const Covariates cov = gen_covariates(config, rng);
    LongitudinalDataset data = gen_response(config, cov, out.truth.beta_true, rng);
    if (config.missing_fraction > 0.0) drop_time_points(data, config.missing_fraction, rng);
    return data;
  };
  out.truth.dataset = draw(1);
  out.validate = draw(2);
  out.test = draw(3);
  return out;
}

}  // namespace sgqif
