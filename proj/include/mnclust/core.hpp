#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "mnclust/types.hpp"

namespace mnclust {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLn2 = 0.6931471805599453094;

// Per-class log joint log(lambda_k * prod_i theta[k][i][x_i]), computed as a
// sum of logs. A zero-probability factor yields -inf for that class.
inline std::vector<double> log_joint_case(const MixtureModel& model,
                                          std::span<const std::int32_t> x) {
  const int n = model.n_vars();
  if (static_cast<int>(x.size()) != n)
    throw SchemaError("log_joint_case: case length mismatch");
  std::vector<double> out(model.K);
  for (int k = 0; k < model.K; ++k) {
    double acc = model.lambda[k] > 0.0 ? std::log(model.lambda[k]) : kNegInf;
    const auto& cls = model.theta[k];
    for (int i = 0; i < n; ++i) {
      const auto& tab = cls[i];
      if (x[i] < 0 || x[i] >= static_cast<int>(tab.size()))
        throw SchemaError("log_joint_case: value out of range");
      const double p = tab[x[i]];
      acc += p > 0.0 ? std::log(p) : kNegInf;
    }
    out[k] = acc;
  }
  return out;
}

// Softmax with max subtraction over a per-class log-joint vector, in place.
// Returns the log-sum-exp (the case's log-likelihood contribution). If every
// entry is -inf the row is set uniform and *degenerate is raised.
inline double normalize_log_joint(std::span<double> lj, bool* degenerate) {
  double m = kNegInf;
  for (double v : lj) m = std::max(m, v);
  if (m == kNegInf) {
    const double u = 1.0 / static_cast<double>(lj.size());
    for (auto& v : lj) v = u;
    if (degenerate) *degenerate = true;
    return kNegInf;
  }
  double s = 0.0;
  for (auto& v : lj) {
    v = std::exp(v - m);
    s += v;
  }
  for (auto& v : lj) v /= s;
  return m + std::log(s);
}

inline std::vector<double> case_posterior(const MixtureModel& model,
                                          std::span<const std::int32_t> x,
                                          bool* degenerate = nullptr) {
  auto lj = log_joint_case(model, x);
  normalize_log_joint(lj, degenerate);
  return lj;
}

// MAP (or, with alpha = 1, ML) parameters from sufficient statistics:
//   theta[k][i][v] = (counts + at - 1) / (mass + r_i (at - 1))
//   lambda[k]      = (mass + ac - 1) / (total + K (ac - 1))
// Zero-mass clusters under ML get uniform tables and are flagged empty.
inline MixtureModel map_estimate(const SuffStats& stats,
                                 const DirichletPrior& prior,
                                 std::vector<bool>* empty_out = nullptr) {
  prior.validate();
  MixtureModel m;
  m.K = stats.K;
  m.lambda.resize(stats.K);
  m.theta.resize(stats.K);
  if (empty_out) empty_out->assign(stats.K, false);

  double total = 0.0;
  for (double v : stats.mass) total += v;
  const double ldenom = total + stats.K * (prior.alpha_class - 1.0);
  for (int k = 0; k < stats.K; ++k)
    m.lambda[k] = ldenom > 0.0
                      ? (stats.mass[k] + prior.alpha_class - 1.0) / ldenom
                      : 1.0 / stats.K;

  for (int k = 0; k < stats.K; ++k) {
    const int n = static_cast<int>(stats.counts[k].size());
    m.theta[k].resize(n);
    const bool empty = stats.mass[k] <= 0.0;
    if (empty && empty_out) (*empty_out)[k] = true;
    for (int i = 0; i < n; ++i) {
      const auto& c = stats.counts[k][i];
      const int r = static_cast<int>(c.size());
      auto& t = m.theta[k][i];
      t.resize(r);
      const double denom = stats.mass[k] + r * (prior.alpha_theta - 1.0);
      if (denom <= 0.0) {
        // mass 0 under ML
        std::fill(t.begin(), t.end(), 1.0 / r);
      } else {
        for (int v = 0; v < r; ++v)
          t[v] = (c[v] + prior.alpha_theta - 1.0) / denom;
      }
    }
  }
  return m;
}

struct LogLik {
  double total_nats = 0.0;
  double bits_per_case = 0.0;
};

// Total log P(D | model) via per-case log-sum-exp over classes, plus the
// base-2 per-case view used for reporting.
inline LogLik log_likelihood(const MixtureModel& model, const Dataset& ds) {
  if (ds.n_cases() == 0) throw SchemaError("log_likelihood: empty dataset");
  if (!model.matches(ds.schema))
    throw SchemaError("log_likelihood: model/dataset schema mismatch");
  double total = 0.0;
  for (std::size_t j = 0; j < ds.n_cases(); ++j) {
    auto lj = log_joint_case(model, ds.row(j));
    total += normalize_log_joint(lj, nullptr);
  }
  return {total, total / (static_cast<double>(ds.n_cases()) * kLn2)};
}

// Complete-data log-likelihood of a (possibly fractional) assignment:
// sum_k mass_k ln lambda_k + sum_{k,i,v} counts ln theta, with 0 ln 0 = 0.
// A zero parameter carrying positive weight yields -inf.
inline double complete_data_loglik_at(const MixtureModel& model,
                                      const SuffStats& stats) {
  if (model.K != stats.K)
    throw SchemaError("complete_data_loglik_at: K mismatch");
  double total = 0.0;
  for (int k = 0; k < stats.K; ++k) {
    if (stats.mass[k] > 0.0) {
      if (model.lambda[k] <= 0.0) return kNegInf;
      total += stats.mass[k] * std::log(model.lambda[k]);
    }
    const auto& cls = stats.counts[k];
    for (std::size_t i = 0; i < cls.size(); ++i)
      for (std::size_t v = 0; v < cls[i].size(); ++v) {
        const double c = cls[i][v];
        if (c > 0.0) {
          const double p = model.theta[k][i][v];
          if (p <= 0.0) return kNegInf;
          total += c * std::log(p);
        }
      }
  }
  return total;
}

// Log-likelihood plus the symmetric-Dirichlet log densities of lambda and
// every theta table, with all Beta-function normalizers dropped. The dropped
// constant is the same for every model of a given structure, so differences
// between iterates are exact. With alpha = 1 this equals the log-likelihood.
// A zero parameter under alpha > 1 yields -inf.
inline double log_param_posterior(const MixtureModel& model, const Dataset& ds,
                                  const DirichletPrior& prior) {
  double lp = log_likelihood(model, ds).total_nats;
  if (prior.alpha_class > 1.0) {
    const double a = prior.alpha_class - 1.0;
    for (double l : model.lambda) {
      if (l <= 0.0) return kNegInf;
      lp += a * std::log(l);
    }
  }
  if (prior.alpha_theta > 1.0) {
    const double a = prior.alpha_theta - 1.0;
    for (const auto& cls : model.theta)
      for (const auto& tab : cls)
        for (double p : tab) {
          if (p <= 0.0) return kNegInf;
          lp += a * std::log(p);
        }
  }
  return lp;
}

}  // namespace mnclust
