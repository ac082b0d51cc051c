#pragma once

#include <algorithm>
#include <cstdint>

#include "mnclust/trainers.hpp"

namespace mnclust {

struct EvalReport {
  double marginal_l_bits = 0.0;
  int k_star = 0;
  int effective_k = 0;
  double holdout_l_bits = 0.0;
  std::optional<double> class_acc;
  double runtime_s = 0.0;
};

// Rows = learned clusters, columns = true classes, entries = case counts.
struct ConfusionMatrix {
  std::vector<std::vector<std::int64_t>> m;

  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& row : m)
      for (auto c : row) t += c;
    return t;
  }
};

// Per-case holdout log-likelihood in bits.
inline double holdout_logl(const MixtureModel& model, const Dataset& test) {
  return log_likelihood(model, test).bits_per_case;
}

inline ConfusionMatrix confusion_from_assignments(const std::vector<int>& assign,
                                                  const std::vector<int>& labels,
                                                  int n_clusters) {
  if (assign.size() != labels.size())
    throw SchemaError("confusion: assignment/label length mismatch");
  int n_true = 0;
  for (int l : labels) {
    if (l < 0) throw SchemaError("confusion: negative label");
    n_true = std::max(n_true, l + 1);
  }
  ConfusionMatrix c;
  c.m.assign(n_clusters, std::vector<std::int64_t>(n_true, 0));
  for (std::size_t j = 0; j < assign.size(); ++j) ++c.m[assign[j]][labels[j]];
  return c;
}

// C[i][i'] = #cases the model assigns to cluster i whose true class is i'.
inline ConfusionMatrix confusion(const MixtureModel& model, const Dataset& test) {
  if (!test.labels) throw SchemaError("confusion: dataset has no labels");
  return confusion_from_assignments(hard_assign(model, test), *test.labels,
                                    model.K);
}

// Map each learned cluster to the true class holding most of its cases
// (ties to the lowest class index, many-to-one allowed), then score the
// mapped assignments.
inline double classification_accuracy(const ConfusionMatrix& c) {
  const std::int64_t total = c.total();
  if (total == 0) throw SchemaError("classification_accuracy: empty matrix");
  std::int64_t correct = 0;
  for (const auto& row : c.m) {
    std::int64_t best = 0;
    for (auto v : row) best = std::max(best, v);
    correct += best;
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

// Clusters with total fractional mass >= 1 (the reported cluster count).
inline int effective_cluster_count(const SuffStats& stats) {
  int k = 0;
  for (double m : stats.mass)
    if (m >= 1.0) ++k;
  return k;
}

inline int effective_cluster_count(const Responsibilities& resp) {
  std::vector<double> mass(resp.K, 0.0);
  for (std::size_t j = 0; j < resp.n_cases; ++j)
    for (int k = 0; k < resp.K; ++k) mass[k] += resp.at(j, k);
  int count = 0;
  for (double m : mass)
    if (m >= 1.0) ++count;
  return count;
}

}  // namespace mnclust
