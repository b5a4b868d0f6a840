#pragma once

// Small random datasets for unit tests, drawn with a local generator so the
// tests do not depend on the simulation module.

#include "sgqif/dataset.hpp"

#include <random>

namespace fixture {

using sgqif::LongitudinalDataset;
using sgqif::Vector;

struct Toy {
  LongitudinalDataset data;
  Vector beta;
};

inline Vector random_beta(int q, int p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const int d = 1 + q + p * (q + 1);
  Vector beta(d);
  for (int c = 0; c < d; ++c) beta(c) = normal(rng);
  return beta;
}

// Y = W beta + noise * eps with correlated within-subject errors.
inline Toy random_toy(int n, int k, int q, int p, std::uint64_t seed, double noise = 1.0,
                      double missing = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  Toy toy{LongitudinalDataset::zeros(n, k, q, p), random_beta(q, p, rng)};
  auto& d = toy.data;
  for (int i = 0; i < n; ++i) {
    for (int v = 0; v < p; ++v) d.gen(i, v) = normal(rng);
    for (int j = 0; j < k; ++j)
      for (int u = 0; u < q; ++u) d.e(i, j, u) = normal(rng);
    const double shared = normal(rng);
    for (int j = 0; j < k; ++j) {
      double mu = toy.beta(0);
      for (int u = 0; u < q; ++u) mu += toy.beta(1 + u) * d.e(i, j, u);
      for (int v = 0; v < p; ++v) {
        const int base = 1 + q + v * (q + 1);
        mu += toy.beta(base) * d.gen(i, v);
        for (int u = 0; u < q; ++u) mu += toy.beta(base + 1 + u) * d.e(i, j, u) * d.gen(i, v);
      }
      d.y(i, j) = mu + noise * (0.6 * shared + 0.8 * normal(rng));
    }
    if (missing > 0.0)
      for (int j = 0; j < k; ++j)
        if (unif(rng) < missing && d.observed_count(i) > 1) d.observed(i, j) = false;
  }
  return toy;
}

// n=60, k=3, p=3, q=1 (d=8): one full group, one main-only group, one null
// group; exchangeable errors.
inline Toy tiny_instance(std::uint64_t seed) {
  Toy toy = random_toy(60, 3, 1, 3, 500 + seed, 0.0);
  toy.beta.resize(8);
  toy.beta << 1.0, 0.5, 0.6, 0.5, 0.5, 0.0, 0.0, 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto& d = toy.data;
  for (int i = 0; i < d.n; ++i) {
    const double shared = normal(rng);
    for (int j = 0; j < d.k; ++j) {
      double mu = toy.beta(0) + toy.beta(1) * d.e(i, j, 0);
      for (int v = 0; v < d.p; ++v)
        mu += (toy.beta(2 + 2 * v) + toy.beta(3 + 2 * v) * d.e(i, j, 0)) * d.gen(i, v);
      d.y(i, j) = mu + 0.6 * shared + 0.8 * normal(rng);
    }
  }
  return toy;
}

}  // namespace fixture
