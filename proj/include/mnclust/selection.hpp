#pragma once

#include <chrono>
#include <cmath>

#include "mnclust/init.hpp"
#include "mnclust/trainers.hpp"

namespace mnclust {

enum class Algorithm { Em, Cem, Hac };

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "em") return Algorithm::Em;
  if (s == "cem") return Algorithm::Cem;
  if (s == "hac") return Algorithm::Hac;
  throw SchemaError("unknown algorithm: " + s);
}

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Em: return "em";
    case Algorithm::Cem: return "cem";
    case Algorithm::Hac: return "hac";
  }
  return "?";
}

// Exact log marginal likelihood of completed data under symmetric Dirichlet
// priors: the Dirichlet-multinomial ratio for the class table and for every
// (class, variable) table, evaluated at the (possibly fractional) counts via
// log-Gamma.
inline double complete_data_log_ml(const SuffStats& stats,
                                   const DirichletPrior& prior) {
  prior.validate();
  auto table_term = [](const std::vector<double>& counts, double alpha) {
    double total = 0.0;
    double lg = 0.0;
    for (double c : counts) {
      if (c < 0.0) throw SchemaError("complete_data_log_ml: negative count");
      total += c;
      lg += std::lgamma(alpha + c) - std::lgamma(alpha);
    }
    const double a0 = alpha * static_cast<double>(counts.size());
    return lg + std::lgamma(a0) - std::lgamma(a0 + total);
  };

  double out = table_term(stats.mass, prior.alpha_class);
  for (int k = 0; k < stats.K; ++k)
    for (const auto& tab : stats.counts[k])
      out += table_term(tab, prior.alpha_theta);
  return out;
}

struct CsScore {
  double total_nats = 0.0;
  double bits_per_case = 0.0;
};

// Cheeseman-Stutz approximation of the log marginal likelihood:
//   CS = log P(completed D) + log P(D | model) - log P(completed D | model)
// with the completed data taken at the E-step expected statistics of the
// fitted model. Exact for K = 1.
inline CsScore cheeseman_stutz(const Dataset& ds, const MixtureModel& model,
                               const DirichletPrior& prior) {
  auto [resp, ll] = e_step(model, ds);
  const SuffStats stats = accumulate_stats(resp, ds);
  const double cs = complete_data_log_ml(stats, prior) + ll -
                    complete_data_loglik_at(model, stats);
  return {cs, cs / (static_cast<double>(ds.n_cases()) * kLn2)};
}

struct SweepConfig {
  int k_min = 1;
  int k_max = 10;
  FitConfig fit;
  InitConfig init;
  int runs_per_k = 1;
  Algorithm algo = Algorithm::Em;
  DirichletPrior score_prior{1.0, 1.0};

  void validate() const {
    if (k_min < 1 || k_min > k_max) throw SchemaError("sweep: bad K range");
    if (runs_per_k < 1) throw SchemaError("sweep: runs_per_k < 1");
    fit.validate();
    init.validate();
    score_prior.validate();
  }
};

struct SweepEntry {
  int k = 0;
  MixtureModel model;
  double cs_bits = 0.0;
  double cs_nats = 0.0;
  double init_seconds = 0.0;
  double fit_seconds = 0.0;
  int iterations = 0;
  bool converged = true;
};

struct SweepResult {
  std::vector<SweepEntry> entries;  // ascending K
  int k_star = 0;

  const SweepEntry& best() const {
    for (const auto& e : entries)
      if (e.k == k_star) return e;
    throw SchemaError("sweep: empty result");
  }
};

namespace detail {

inline int pick_k_star(const std::vector<SweepEntry>& entries) {
  int k_star = 0;
  double best = kNegInf;
  for (const auto& e : entries)  // ascending K; ties keep the smaller K
    if (e.cs_bits > best) {
      best = e.cs_bits;
      k_star = e.k;
    }
  return k_star;
}

}  // namespace detail

// Fit one model per K in [k_min, k_max] (EM or CEM), score each with the
// Cheeseman-Stutz criterion, and select K* by argmax (ties to smaller K).
// Each (K, run) gets a sub-seed derived from the configured seed, so the
// same seed is comparable across algorithms and K ranges. With
// runs_per_k > 1 the best-scoring run per K is kept.
inline SweepResult sweep_k(const Dataset& ds, const SweepConfig& cfg) {
  cfg.validate();
  if (cfg.algo == Algorithm::Hac)
    throw SchemaError("sweep_k: use sweep_hac for agglomerative sweeps");
  SweepResult res;
  for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
    SweepEntry best;
    for (int run = 0; run < cfg.runs_per_k; ++run) {
      InitConfig init = cfg.init;
      init.seed = split_seed(cfg.init.seed, SeedStream::SweepRun,
                             static_cast<std::uint64_t>(k) * 1024 + run);
      const auto ti = std::chrono::steady_clock::now();
      MixtureModel start = make_init(ds, k, init);
      const double init_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - ti).count();
      FitResult fit = cfg.algo == Algorithm::Em ? em_fit(ds, start, cfg.fit)
                                                : cem_fit(ds, start, cfg.fit);
      const CsScore score = cheeseman_stutz(ds, fit.model, cfg.score_prior);
      if (run == 0 || score.bits_per_case > best.cs_bits) {
        best = {k, std::move(fit.model), score.bits_per_case, score.total_nats,
                init_s, fit.seconds, fit.iterations, fit.converged};
      }
    }
    res.entries.push_back(std::move(best));
  }
  res.k_star = detail::pick_k_star(res.entries);
  return res;
}

// HAC model-structure sweep: one agglomeration down to k_min, then the merge
// history is replayed to recover the cluster statistics at every level
// K in [k_min, k_max]; each level is turned into a model by map_estimate and
// scored like any other fit. The agglomeration time is reported as the fit
// time of every entry (the sweep shares a single agglomeration).
inline SweepResult sweep_hac(const Dataset& ds, int k_min, int k_max,
                             const DirichletPrior& fit_prior,
                             const DirichletPrior& score_prior) {
  if (k_min < 1 || k_min > k_max) throw SchemaError("sweep_hac: bad K range");
  const int N = static_cast<int>(ds.n_cases());
  HacResult hr = run_hac(ds, std::min(k_min, N));

  std::vector<ClusterNode> nodes = singleton_stats(ds);
  const int n = ds.n_vars();
  auto snapshot = [&](int K) {
    SuffStats s;
    s.K = K;
    for (const auto& node : nodes) {
      if (!node.active) continue;
      s.mass.push_back(node.mass);
      s.counts.emplace_back();
      auto& cls = s.counts.back();
      cls.resize(n);
      int off = 0;
      for (int i = 0; i < n; ++i) {
        const int r = ds.schema.cardinalities[i];
        cls[i].assign(node.counts.begin() + off, node.counts.begin() + off + r);
        off += r;
      }
    }
    return s;
  };

  std::vector<SweepEntry> entries;
  auto add_level = [&](int K) {
    SweepEntry e;
    e.k = K;
    e.model = map_estimate(snapshot(K), fit_prior);
    const CsScore score = cheeseman_stutz(ds, e.model, score_prior);
    e.cs_bits = score.bits_per_case;
    e.cs_nats = score.total_nats;
    e.fit_seconds = hr.seconds;
    entries.push_back(std::move(e));
  };

  int active = N;
  if (active >= k_min && active <= k_max) add_level(active);
  for (const auto& m : hr.merges) {
    for (std::size_t e = 0; e < nodes[m.left].counts.size(); ++e)
      nodes[m.left].counts[e] += nodes[m.right].counts[e];
    nodes[m.left].mass += nodes[m.right].mass;
    nodes[m.right].active = false;
    --active;
    if (active >= k_min && active <= k_max) add_level(active);
  }

  SweepResult res;
  res.entries.assign(entries.rbegin(), entries.rend());  // ascending K
  res.k_star = detail::pick_k_star(res.entries);
  return res;
}

}  // namespace mnclust
