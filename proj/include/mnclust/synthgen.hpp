#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mnclust/rng.hpp"
#include "mnclust/types.hpp"

namespace mnclust {

// Fixed class prior of the synthetic generator (power-decay over 10 classes).
inline const std::vector<double>& synth_class_prior() {
  static const std::vector<double> lambda = {0.25, 0.18, 0.18, 0.09, 0.09,
                                             0.09, 0.045, 0.035, 0.025, 0.015};
  return lambda;
}

struct GenConfig {
  int n_total = 300;
  int n_keep = 150;
  int train_n = 32000;
  int test_n = 8000;
  double zipf_exponent = 1.0;
  double p_max = 0.5;
  double p_min = 0.005;
  // Per-class mean of the log-odds perturbation: negative for the large
  // classes, positive for the small ones (small clusters get more hits).
  std::vector<double> class_noise_means = {-0.5, -0.5, -0.5, 0.0, 0.0,
                                           0.0,  1.0,  1.0,  1.0, 1.0};
  bool noise_as_stddev = true;  // N(m, x): read x as a standard deviation
  double noise_scale = 1.0;      // 0 disables all perturbations
  std::uint64_t seed = 0;

  void validate() const {
    if (n_keep < 1 || n_keep > n_total) throw SchemaError("gen: bad n_keep");
    if (train_n < 1 || test_n < 1) throw SchemaError("gen: bad sample sizes");
    if (p_min <= 0.0 || p_max >= 1.0 || p_min > p_max)
      throw SchemaError("gen: bad marginal range");
    if (class_noise_means.size() != synth_class_prior().size())
      throw SchemaError("gen: class_noise_means must cover all classes");
  }
};

// Naive-Bayes backbone (class prior + per-class hit log-odds) extended with
// parent arcs among the observed variables: each variable may have up to
// three lower-indexed parents, and every (class, parent configuration) adds
// a log-odds offset.
struct GeneratorModel {
  int K = 0;
  int n_vars = 0;
  std::vector<double> lambda;
  std::vector<std::vector<double>> base_logodds;   // [var][class]
  std::vector<std::vector<int>> parents;           // [var], indices < var
  std::vector<std::vector<double>> offsets;        // [var][paconf * K + class]
  std::uint64_t seed = 0;

  double mean_parent_count() const {
    double s = 0.0;
    for (const auto& p : parents) s += static_cast<double>(p.size());
    return s / static_cast<double>(parents.size());
  }
};

// Power-law marginal hit rates: p_i = p_max / i^s, floored at p_min.
inline std::vector<double> zipf_marginals(const GenConfig& cfg) {
  cfg.validate();
  std::vector<double> p(cfg.n_total);
  for (int i = 0; i < cfg.n_total; ++i)
    p[i] = std::max(cfg.p_min,
                    cfg.p_max / std::pow(static_cast<double>(i + 1),
                                         cfg.zipf_exponent));
  return p;
}

namespace detail {
inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
}  // namespace detail

inline GeneratorModel build_generator(const GenConfig& cfg) {
  cfg.validate();
  const auto p = zipf_marginals(cfg);
  const int K = static_cast<int>(synth_class_prior().size());
  GeneratorModel g;
  g.K = K;
  g.n_vars = cfg.n_total;
  g.lambda = synth_class_prior();
  g.seed = cfg.seed;

  Rng rng = make_rng(split_seed(cfg.seed, SeedStream::Generate));
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  const double arc_sd = cfg.noise_as_stddev ? 0.25 : 0.5;  // N(0, 0.25)

  // Per-class hit log-odds: logit(p_i) perturbed by N(alpha_k, 1).
  g.base_logodds.resize(cfg.n_total);
  for (int i = 0; i < cfg.n_total; ++i) {
    g.base_logodds[i].resize(K);
    for (int k = 0; k < K; ++k) {
      const double eps = cfg.class_noise_means[k] + unit_normal(rng);
      g.base_logodds[i][k] = detail::logit(p[i]) + cfg.noise_scale * eps;
    }
  }

  // Parent sets: count in {1,2,3} w.p. (0.35, 0.30, 0.35) -> mean 2, capped
  // by the number of lower-indexed candidates; parents drawn uniformly
  // without replacement.
  g.parents.resize(cfg.n_total);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < cfg.n_total; ++i) {
    const double u = unif(rng);
    int want = u < 0.35 ? 1 : (u < 0.65 ? 2 : 3);
    want = std::min(want, i);
    std::vector<int> cand(i);
    std::iota(cand.begin(), cand.end(), 0);
    for (int t = 0; t < want; ++t) {
      std::uniform_int_distribution<int> pick(t, i - 1);
      std::swap(cand[t], cand[pick(rng)]);
    }
    g.parents[i].assign(cand.begin(), cand.begin() + want);
    std::sort(g.parents[i].begin(), g.parents[i].end());
  }

  // Per (variable, class, parent configuration) log-odds offsets ~ N(0, 0.25).
  g.offsets.resize(cfg.n_total);
  for (int i = 0; i < cfg.n_total; ++i) {
    const std::size_t n_conf = std::size_t{1} << g.parents[i].size();
    g.offsets[i].resize(n_conf * K);
    for (std::size_t c = 0; c < n_conf; ++c)
      for (int k = 0; k < K; ++k)
        g.offsets[i][c * K + k] = cfg.noise_scale * arc_sd * unit_normal(rng);
  }
  return g;
}

namespace detail {

inline std::size_t parent_config(const GeneratorModel& g, int var,
                                 std::span<const std::int32_t> x) {
  std::size_t conf = 0;
  const auto& pa = g.parents[var];
  for (std::size_t b = 0; b < pa.size(); ++b)
    if (x[pa[b]] != 0) conf |= std::size_t{1} << b;
  return conf;
}

inline double hit_logodds(const GeneratorModel& g, int var, int cls,
                          std::span<const std::int32_t> x) {
  return g.base_logodds[var][cls] +
         g.offsets[var][parent_config(g, var, x) * g.K + cls];
}

}  // namespace detail

// Ancestral sampling: class from lambda, then variables in index order, each
// a Bernoulli on the sigmoid of its (class, parent configuration) log-odds.
inline Dataset sample_cases(const GeneratorModel& g, int count,
                            std::uint64_t seed) {
  if (count < 1) throw SchemaError("sample_cases: count < 1");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Dataset ds;
  ds.schema = VariableSchema::binary(g.n_vars);
  ds.labels.emplace();
  ds.values.reserve(static_cast<std::size_t>(count) * g.n_vars);
  std::vector<std::int32_t> x(g.n_vars);
  for (int j = 0; j < count; ++j) {
    const double u = unif(rng);
    int cls = g.K - 1;
    double cum = 0.0;
    for (int k = 0; k < g.K; ++k) {
      cum += g.lambda[k];
      if (u < cum) {
        cls = k;
        break;
      }
    }
    for (int i = 0; i < g.n_vars; ++i) {
      const double ph = detail::sigmoid(detail::hit_logodds(g, i, cls, x));
      x[i] = unif(rng) < ph ? 1 : 0;
    }
    ds.append_case(x);
    ds.labels->push_back(cls);
  }
  return ds;
}

// Exact class posterior under the generator for a fully observed case
// (all parents visible), argmax with ties to the lowest class.
inline int classify_true(const GeneratorModel& g,
                         std::span<const std::int32_t> x) {
  int best = 0;
  double best_lp = kNegInf;
  for (int k = 0; k < g.K; ++k) {
    double lp = std::log(g.lambda[k]);
    for (int i = 0; i < g.n_vars; ++i) {
      const double z = detail::hit_logodds(g, i, k, x);
      // log sigmoid(z) resp. log(1 - sigmoid(z)), stable for large |z|
      lp += x[i] != 0 ? -std::log1p(std::exp(-z)) : -std::log1p(std::exp(z));
    }
    if (lp > best_lp) {
      best_lp = lp;
      best = k;
    }
  }
  return best;
}

// Variables ranked by hit count (ties to the lower index); top n_keep kept,
// reported in original variable order.
inline std::vector<int> retained_variables(const Dataset& ds, int n_keep) {
  if (n_keep > ds.n_vars()) throw SchemaError("retained_variables: n_keep > n");
  std::vector<std::int64_t> hits(ds.n_vars(), 0);
  for (std::size_t j = 0; j < ds.n_cases(); ++j) {
    auto r = ds.row(j);
    for (int i = 0; i < ds.n_vars(); ++i)
      if (r[i] != 0) ++hits[i];
  }
  std::vector<int> order(ds.n_vars());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return hits[a] > hits[b]; });
  order.resize(n_keep);
  std::sort(order.begin(), order.end());
  return order;
}

inline Dataset project(const Dataset& ds, const std::vector<int>& keep) {
  Dataset out;
  out.schema.names.reserve(keep.size());
  out.schema.cardinalities.reserve(keep.size());
  for (int i : keep) {
    out.schema.names.push_back(ds.schema.names[i]);
    out.schema.cardinalities.push_back(ds.schema.cardinalities[i]);
  }
  out.labels = ds.labels;
  out.values.reserve(ds.n_cases() * keep.size());
  std::vector<std::int32_t> x(keep.size());
  for (std::size_t j = 0; j < ds.n_cases(); ++j) {
    auto r = ds.row(j);
    for (std::size_t i = 0; i < keep.size(); ++i) x[i] = r[keep[i]];
    out.append_case(x);
  }
  return out;
}

inline Dataset discard_rare(const Dataset& ds, int n_keep) {
  return project(ds, retained_variables(ds, n_keep));
}

// Full generation pipeline: train/test over all variables, the retained-
// variable list derived from the train hit counts and applied to both.
struct SynthData {
  GeneratorModel generator;
  Dataset train_full;  // all n_total variables (used for true-model scoring)
  Dataset test_full;
  std::vector<int> retained;
  Dataset train;       // n_keep variables
  Dataset test;
};

inline SynthData generate_synthetic(const GenConfig& cfg) {
  SynthData d;
  d.generator = build_generator(cfg);
  d.train_full = sample_cases(d.generator, cfg.train_n,
                              split_seed(cfg.seed, SeedStream::Generate, 1));
  d.test_full = sample_cases(d.generator, cfg.test_n,
                             split_seed(cfg.seed, SeedStream::Generate, 2));
  d.retained = retained_variables(d.train_full, cfg.n_keep);
  d.train = project(d.train_full, d.retained);
  d.test = project(d.test_full, d.retained);
  return d;
}

}  // namespace mnclust
