#pragma once

#include <random>

#include "mnclust/core.hpp"
#include "mnclust/rng.hpp"

namespace testutil {

using namespace mnclust;

inline MixtureModel random_model(const VariableSchema& schema, int K, Rng& rng) {
  MixtureModel m;
  m.K = K;
  m.lambda = sample_dirichlet(std::vector<double>(K, 1.0), rng);
  m.theta.resize(K);
  for (int k = 0; k < K; ++k) {
    m.theta[k].resize(schema.n_vars());
    for (int i = 0; i < schema.n_vars(); ++i)
      m.theta[k][i] =
          sample_dirichlet(std::vector<double>(schema.cardinalities[i], 1.0), rng);
  }
  return m;
}

inline Dataset random_dataset(const VariableSchema& schema, std::size_t n_cases,
                              Rng& rng) {
  Dataset ds;
  ds.schema = schema;
  std::vector<std::int32_t> x(schema.n_vars());
  for (std::size_t j = 0; j < n_cases; ++j) {
    for (int i = 0; i < schema.n_vars(); ++i) {
      std::uniform_int_distribution<int> d(0, schema.cardinalities[i] - 1);
      x[i] = d(rng);
    }
    ds.append_case(x);
  }
  return ds;
}

// Two well-separated binary patterns, `half` cases each, labeled.
inline Dataset planted_two_cluster(int n_vars, int half) {
  Dataset ds;
  ds.schema = VariableSchema::binary(n_vars);
  ds.labels.emplace();
  std::vector<std::int32_t> zeros(n_vars, 0), ones(n_vars, 1);
  for (int j = 0; j < half; ++j) {
    ds.append_case(zeros);
    ds.labels->push_back(0);
  }
  for (int j = 0; j < half; ++j) {
    ds.append_case(ones);
    ds.labels->push_back(1);
  }
  return ds;
}

// Direct mixture evaluation without logs (test oracle).
inline double brute_force_loglik(const MixtureModel& m, const Dataset& ds) {
  double total = 0.0;
  for (std::size_t j = 0; j < ds.n_cases(); ++j) {
    auto x = ds.row(j);
    double p = 0.0;
    for (int k = 0; k < m.K; ++k) {
      double t = m.lambda[k];
      for (int i = 0; i < ds.n_vars(); ++i) t *= m.theta[k][i][x[i]];
      p += t;
    }
    total += std::log(p);
  }
  return total;
}

}  // namespace testutil
