#pragma once

#include <chrono>
#include <cmath>
#include <cstring>
#include <utility>

#include "mnclust/core.hpp"

namespace mnclust {

enum class Objective { Map, Ml };

struct FitConfig {
  int max_iters = 150;
  double rel_tol = 1e-6;
  DirichletPrior prior;
  Objective objective = Objective::Map;

  void validate() const {
    if (max_iters < 1) throw SchemaError("fit: max_iters < 1");
    if (rel_tol <= 0.0) throw SchemaError("fit: rel_tol <= 0");
    prior.validate();
  }
};

struct FitResult {
  MixtureModel model;
  double final_objective = 0.0;
  int iterations = 0;
  std::vector<double> objective_trace;
  double seconds = 0.0;
  bool converged = false;
};

namespace detail {

// Flattened log tables, layout [var][value][class]: the per-class inner loop
// over k is contiguous.
struct LogTables {
  int K = 0;
  int n = 0;
  std::vector<int> offset;        // var -> start slot (in value units)
  std::vector<double> log_lambda; // K
  std::vector<double> lt;         // (sum r_i) * K
  bool theta0_zero = false;       // some theta[k][i][0] == 0

  static LogTables build(const MixtureModel& m) {
    LogTables t;
    t.K = m.K;
    t.n = m.n_vars();
    t.offset.resize(t.n + 1);
    int off = 0;
    for (int i = 0; i < t.n; ++i) {
      t.offset[i] = off;
      off += static_cast<int>(m.theta[0][i].size());
    }
    t.offset[t.n] = off;
    t.log_lambda.resize(t.K);
    for (int k = 0; k < t.K; ++k)
      t.log_lambda[k] = m.lambda[k] > 0.0 ? std::log(m.lambda[k]) : kNegInf;
    t.lt.assign(static_cast<std::size_t>(off) * t.K, 0.0);
    for (int k = 0; k < t.K; ++k)
      for (int i = 0; i < t.n; ++i) {
        const auto& tab = m.theta[k][i];
        for (std::size_t v = 0; v < tab.size(); ++v) {
          const double p = tab[v];
          t.lt[(t.offset[i] + v) * t.K + k] = p > 0.0 ? std::log(p) : kNegInf;
          if (v == 0 && p <= 0.0) t.theta0_zero = true;
        }
      }
    return t;
  }
};

// Hit-list view of an all-binary dataset. Zipf-style data has few ones per
// case, so scanning hits beats scanning all variables by a large factor.
struct SparseBinary {
  std::vector<std::int32_t> ones;
  std::vector<std::size_t> start;  // n_cases + 1

  static SparseBinary build(const Dataset& ds) {
    SparseBinary s;
    s.start.resize(ds.n_cases() + 1);
    s.start[0] = 0;
    for (std::size_t j = 0; j < ds.n_cases(); ++j) {
      auto r = ds.row(j);
      for (std::size_t i = 0; i < r.size(); ++i)
        if (r[i] != 0) s.ones.push_back(static_cast<std::int32_t>(i));
      s.start[j + 1] = s.ones.size();
    }
    return s;
  }
};

inline bool use_binary_fast_path(const Dataset& ds) {
  return ds.schema.all_binary() &&
         ds.n_cases() * static_cast<std::size_t>(ds.n_vars()) >= 16384;
}

// Calls visit(j, lj) with the per-class log-joint vector of every case.
template <class Visit>
void for_each_log_joint(const MixtureModel& model, const Dataset& ds,
                        Visit&& visit) {
  if (!model.matches(ds.schema))
    throw SchemaError("trainers: model/dataset schema mismatch");
  const LogTables t = LogTables::build(model);
  const int K = t.K;
  std::vector<double> lj(K);

  if (use_binary_fast_path(ds) && !t.theta0_zero) {
    // lj_k = base_k + sum over hit vars of (log theta1 - log theta0)
    std::vector<double> base(t.log_lambda);
    std::vector<double> delta(static_cast<std::size_t>(t.n) * K);
    for (int i = 0; i < t.n; ++i) {
      const double* l0 = t.lt.data() + static_cast<std::size_t>(t.offset[i]) * K;
      const double* l1 = l0 + K;
      for (int k = 0; k < K; ++k) {
        base[k] += l0[k];
        delta[static_cast<std::size_t>(i) * K + k] = l1[k] - l0[k];
      }
    }
    const SparseBinary sp = SparseBinary::build(ds);
    for (std::size_t j = 0; j < ds.n_cases(); ++j) {
      std::memcpy(lj.data(), base.data(), sizeof(double) * K);
      for (std::size_t e = sp.start[j]; e < sp.start[j + 1]; ++e) {
        const double* d = delta.data() + static_cast<std::size_t>(sp.ones[e]) * K;
        for (int k = 0; k < K; ++k) lj[k] += d[k];
      }
      visit(j, std::span<double>(lj));
    }
    return;
  }

  for (std::size_t j = 0; j < ds.n_cases(); ++j) {
    std::memcpy(lj.data(), t.log_lambda.data(), sizeof(double) * K);
    auto x = ds.row(j);
    for (int i = 0; i < t.n; ++i) {
      const double* row = t.lt.data() + static_cast<std::size_t>(t.offset[i] + x[i]) * K;
      for (int k = 0; k < K; ++k) lj[k] += row[k];
    }
    visit(j, std::span<double>(lj));
  }
}

}  // namespace detail

// E step: responsibilities for every case plus the total log-likelihood of
// the same pass.
inline std::pair<Responsibilities, double> e_step(const MixtureModel& model,
                                                  const Dataset& ds) {
  Responsibilities resp;
  resp.n_cases = ds.n_cases();
  resp.K = model.K;
  resp.p.resize(ds.n_cases() * model.K);
  double total = 0.0;
  detail::for_each_log_joint(model, ds, [&](std::size_t j, std::span<double> lj) {
    total += normalize_log_joint(lj, nullptr);
    std::memcpy(resp.p.data() + j * model.K, lj.data(),
                sizeof(double) * model.K);
  });
  return {std::move(resp), total};
}

// mass[k] = sum_j resp[j][k]; counts[k][i][v] = sum over cases with x_i = v.
inline SuffStats accumulate_stats(const Responsibilities& resp,
                                  const Dataset& ds) {
  if (resp.n_cases != ds.n_cases())
    throw SchemaError("accumulate_stats: dimension mismatch");
  const int K = resp.K;
  const int n = ds.n_vars();
  SuffStats out = SuffStats::zeros(K, ds.schema);

  if (detail::use_binary_fast_path(ds)) {
    const detail::SparseBinary sp = detail::SparseBinary::build(ds);
    std::vector<double> c1(static_cast<std::size_t>(n) * K, 0.0);
    for (std::size_t j = 0; j < ds.n_cases(); ++j) {
      const double* r = resp.p.data() + j * K;
      for (int k = 0; k < K; ++k) out.mass[k] += r[k];
      for (std::size_t e = sp.start[j]; e < sp.start[j + 1]; ++e) {
        double* c = c1.data() + static_cast<std::size_t>(sp.ones[e]) * K;
        for (int k = 0; k < K; ++k) c[k] += r[k];
      }
    }
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < n; ++i) {
        const double ones = c1[static_cast<std::size_t>(i) * K + k];
        out.counts[k][i][1] = ones;
        out.counts[k][i][0] = std::max(0.0, out.mass[k] - ones);
      }
    return out;
  }

  std::vector<int> offset(n + 1);
  int off = 0;
  for (int i = 0; i < n; ++i) {
    offset[i] = off;
    off += ds.schema.cardinalities[i];
  }
  offset[n] = off;
  std::vector<double> acc(static_cast<std::size_t>(off) * K, 0.0);
  for (std::size_t j = 0; j < ds.n_cases(); ++j) {
    const double* r = resp.p.data() + j * K;
    auto x = ds.row(j);
    for (int k = 0; k < K; ++k) out.mass[k] += r[k];
    for (int i = 0; i < n; ++i) {
      double* c = acc.data() + static_cast<std::size_t>(offset[i] + x[i]) * K;
      for (int k = 0; k < K; ++k) c[k] += r[k];
    }
  }
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < n; ++i)
      for (int v = 0; v < ds.schema.cardinalities[i]; ++v)
        out.counts[k][i][v] = acc[static_cast<std::size_t>(offset[i] + v) * K + k];
  return out;
}

// Argmax of the case posterior per case; ties go to the lowest class index.
inline std::vector<int> hard_assign(const MixtureModel& model,
                                    const Dataset& ds) {
  std::vector<int> out(ds.n_cases());
  detail::for_each_log_joint(model, ds, [&](std::size_t j, std::span<double> lj) {
    int best = 0;
    for (int k = 1; k < model.K; ++k)
      if (lj[k] > lj[best]) best = k;
    out[j] = best;
  });
  return out;
}

// Integer tallies from a hard assignment vector.
inline SuffStats stats_from_assignments(const Dataset& ds,
                                        const std::vector<int>& assign, int K) {
  if (assign.size() != ds.n_cases())
    throw SchemaError("stats_from_assignments: length mismatch");
  SuffStats out = SuffStats::zeros(K, ds.schema);
  for (std::size_t j = 0; j < ds.n_cases(); ++j) {
    const int k = assign[j];
    if (k < 0 || k >= K) throw SchemaError("stats_from_assignments: bad class");
    out.mass[k] += 1.0;
    auto x = ds.row(j);
    for (int i = 0; i < ds.n_vars(); ++i) out.counts[k][i][x[i]] += 1.0;
  }
  return out;
}

namespace detail {

// Unnormalized symmetric-Dirichlet log density of the parameters (the prior
// term of the MAP objective; normalizers dropped, see log_param_posterior).
inline double log_prior_term(const MixtureModel& m, const DirichletPrior& prior) {
  double lp = 0.0;
  if (prior.alpha_class > 1.0) {
    const double a = prior.alpha_class - 1.0;
    for (double l : m.lambda) {
      if (l <= 0.0) return kNegInf;
      lp += a * std::log(l);
    }
  }
  if (prior.alpha_theta > 1.0) {
    const double a = prior.alpha_theta - 1.0;
    for (const auto& cls : m.theta)
      for (const auto& tab : cls)
        for (double p : tab) {
          if (p <= 0.0) return kNegInf;
          lp += a * std::log(p);
        }
  }
  return lp;
}

inline bool rel_converged(double prev, double cur, double rel_tol) {
  if (!std::isfinite(prev) || !std::isfinite(cur)) return false;
  const double diff = std::abs(cur - prev);
  if (diff < 1e-12) return true;  // absolute fallback near zero
  return diff <= rel_tol * std::abs(prev);
}

inline void check_monotone(double prev, double cur) {
  if (!std::isfinite(prev)) return;
  const double slack = 1e-9 * std::max(std::abs(prev), 1.0);
  if (cur < prev - slack)
    throw std::logic_error("objective decreased during fitting");
}

}  // namespace detail

// EM: alternates E step / stats accumulation / MAP (or ML) re-estimation.
// Convergence on the relative change of the objective between successive
// iterations; the objective is the log parameter posterior for MAP fits and
// the log-likelihood for ML fits.
inline FitResult em_fit(const Dataset& ds, const MixtureModel& init,
                        const FitConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  FitResult res;
  res.model = init;

  auto objective_of = [&](double ll, const MixtureModel& m) {
    return cfg.objective == Objective::Map
               ? ll + detail::log_prior_term(m, cfg.prior)
               : ll;
  };
  const DirichletPrior mprior =
      cfg.objective == Objective::Map ? cfg.prior : DirichletPrior::ml();

  auto [resp, ll] = e_step(res.model, ds);
  double obj = objective_of(ll, res.model);
  res.objective_trace.push_back(obj);

  while (res.iterations < cfg.max_iters) {
    SuffStats stats = accumulate_stats(resp, ds);
    MixtureModel next = map_estimate(stats, mprior);
    auto [nresp, nll] = e_step(next, ds);
    const double nobj = objective_of(nll, next);
    ++res.iterations;
    res.objective_trace.push_back(nobj);
    detail::check_monotone(obj, nobj);
    res.model = std::move(next);
    resp = std::move(nresp);
    if (detail::rel_converged(obj, nobj, cfg.rel_tol)) {
      obj = nobj;
      res.converged = true;
      break;
    }
    obj = nobj;
  }
  res.final_objective = obj;
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// CEM: winner-take-all E step. Terminates when the assignment vector repeats
// exactly (complete convergence); the numeric threshold applies as a safety
// net. Clusters that lose all cases stay alive with prior-smoothed tables.
inline FitResult cem_fit(const Dataset& ds, const MixtureModel& init,
                         const FitConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  FitResult res;
  res.model = init;
  const DirichletPrior mprior =
      cfg.objective == Objective::Map ? cfg.prior : DirichletPrior::ml();

  auto objective_of = [&](const MixtureModel& m, const SuffStats& s) {
    double o = complete_data_loglik_at(m, s);
    if (cfg.objective == Objective::Map) o += detail::log_prior_term(m, cfg.prior);
    return o;
  };

  std::vector<int> assign = hard_assign(res.model, ds);
  double obj = objective_of(res.model, stats_from_assignments(ds, assign, init.K));
  res.objective_trace.push_back(obj);

  while (res.iterations < cfg.max_iters) {
    SuffStats stats = stats_from_assignments(ds, assign, init.K);
    MixtureModel next = map_estimate(stats, mprior);
    std::vector<int> nassign = hard_assign(next, ds);
    const double nobj = objective_of(next, stats_from_assignments(ds, nassign, init.K));
    ++res.iterations;
    res.objective_trace.push_back(nobj);
    detail::check_monotone(obj, nobj);
    res.model = std::move(next);
    const bool same = (nassign == assign);
    assign = std::move(nassign);
    if (same || detail::rel_converged(obj, nobj, cfg.rel_tol)) {
      obj = nobj;
      res.converged = true;
      break;
    }
    obj = nobj;
  }
  res.final_objective = obj;
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace mnclust
