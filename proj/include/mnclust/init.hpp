#pragma once

#include <algorithm>

#include "mnclust/core.hpp"
#include "mnclust/hac.hpp"
#include "mnclust/rng.hpp"

namespace mnclust {

enum class InitMethod { Random, Marginal, Hac };

struct InitConfig {
  InitMethod method = InitMethod::Marginal;
  std::uint64_t seed = 0;
  double marginal_ess = 2.0;
  int hac_subsample = 2000;
  DirichletPrior hac_prior;  // smoothing for the MAP on agglomerated counts

  void validate() const {
    if (marginal_ess <= 0.0) throw SchemaError("init: marginal_ess <= 0");
    if (hac_subsample < 1) throw SchemaError("init: hac_subsample < 1");
    hac_prior.validate();
  }
};

inline InitMethod parse_init_method(const std::string& s) {
  if (s == "random") return InitMethod::Random;
  if (s == "marginal") return InitMethod::Marginal;
  if (s == "hac") return InitMethod::Hac;
  throw SchemaError("unknown init method: " + s);
}

inline std::string to_string(InitMethod m) {
  switch (m) {
    case InitMethod::Random: return "random";
    case InitMethod::Marginal: return "marginal";
    case InitMethod::Hac: return "hac";
  }
  return "?";
}

// Data-independent start: every theta row from Dirichlet(1, ..., 1)
// (equivalent sample size = number of states); uniform class prior.
// Draw order is class-major, variable-minor.
inline MixtureModel init_random(const VariableSchema& schema, int K,
                                std::uint64_t seed) {
  schema.validate();
  if (K < 1) throw SchemaError("init_random: K < 1");
  Rng rng = make_rng(seed);
  MixtureModel m;
  m.K = K;
  m.lambda.assign(K, 1.0 / K);
  m.theta.resize(K);
  for (int k = 0; k < K; ++k) {
    m.theta[k].resize(schema.n_vars());
    for (int i = 0; i < schema.n_vars(); ++i) {
      std::vector<double> alpha(schema.cardinalities[i], 1.0);
      m.theta[k][i] = sample_dirichlet(alpha, rng);
    }
  }
  return m;
}

// One-class MAP marginals of the data (uniform parameter prior, alpha = 2).
inline std::vector<std::vector<double>> marginal_map(const Dataset& ds) {
  SuffStats s = SuffStats::zeros(1, ds.schema);
  s.mass[0] = static_cast<double>(ds.n_cases());
  for (std::size_t j = 0; j < ds.n_cases(); ++j) {
    auto x = ds.row(j);
    for (int i = 0; i < ds.n_vars(); ++i) s.counts[0][i][x[i]] += 1.0;
  }
  return map_estimate(s, DirichletPrior{2.0, 2.0}).theta[0];
}

// Noisy-marginal start: every theta[k][i] drawn from a Dirichlet centered on
// the one-class MAP marginal, alpha_v = ess * marginal_v; uniform class prior.
inline MixtureModel init_marginal(const Dataset& ds, int K, std::uint64_t seed,
                                  double ess = 2.0) {
  if (K < 1) throw SchemaError("init_marginal: K < 1");
  if (ess <= 0.0) throw SchemaError("init_marginal: ess <= 0");
  const auto marg = marginal_map(ds);
  Rng rng = make_rng(seed);
  MixtureModel m;
  m.K = K;
  m.lambda.assign(K, 1.0 / K);
  m.theta.resize(K);
  for (int k = 0; k < K; ++k) {
    m.theta[k].resize(ds.n_vars());
    for (int i = 0; i < ds.n_vars(); ++i) {
      std::vector<double> alpha(marg[i].size());
      for (std::size_t v = 0; v < alpha.size(); ++v) alpha[v] = ess * marg[i][v];
      m.theta[k][i] = sample_dirichlet(alpha, rng);
    }
  }
  return m;
}

// Uniform subsample of n_sub cases without replacement, in input order.
inline Dataset subsample_cases(const Dataset& ds, int n_sub, std::uint64_t seed) {
  const int N = static_cast<int>(ds.n_cases());
  if (n_sub < 1 || n_sub > N) throw SchemaError("subsample: n_sub out of range");
  std::vector<int> idx(N);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n_sub);
  std::sort(idx.begin(), idx.end());
  Dataset out;
  out.schema = ds.schema;
  if (ds.labels) out.labels.emplace();
  for (int j : idx) {
    out.append_case(ds.row(j));
    if (ds.labels) out.labels->push_back((*ds.labels)[j]);
  }
  return out;
}

// HAC start: agglomerate a subsample down to K clusters and take the MAP of
// the resulting counts under the given (smoothing) prior.
inline MixtureModel init_from_hac(const Dataset& ds, int K, std::uint64_t seed,
                                  int n_sub, const DirichletPrior& prior) {
  if (n_sub < K) throw SchemaError("init_from_hac: n_sub < K");
  Dataset sub = subsample_cases(ds, n_sub, seed);
  HacResult hr = run_hac(sub, K);
  return map_estimate(hac_to_stats(hr), prior);
}

inline MixtureModel make_init(const Dataset& ds, int K, const InitConfig& cfg) {
  cfg.validate();
  switch (cfg.method) {
    case InitMethod::Random:
      return init_random(ds.schema, K, cfg.seed);
    case InitMethod::Marginal:
      return init_marginal(ds, K, cfg.seed, cfg.marginal_ess);
    case InitMethod::Hac: {
      const int n_sub = std::min<int>(cfg.hac_subsample,
                                      static_cast<int>(ds.n_cases()));
      return init_from_hac(ds, K, cfg.seed, n_sub, cfg.hac_prior);
    }
  }
  throw SchemaError("init: bad method");
}

}  // namespace mnclust
