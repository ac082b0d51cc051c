#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "mnclust/core.hpp"

namespace mnclust {

namespace detail {
inline std::atomic<std::int64_t> hac_node_allocations{0};
}

inline void reset_hac_node_allocations() { detail::hac_node_allocations = 0; }
inline std::int64_t hac_node_allocations() { return detail::hac_node_allocations; }

// One agglomeration cluster: mass, flattened value counts (variable-major),
// the cached ML log-likelihood contribution L_k, and the nearest-neighbor
// cache used by run_hac.
struct ClusterNode {
  double mass = 0.0;
  std::vector<double> counts;  // concatenated per-variable value counts
  // For all-binary schemas (counts.size() == 2 * n_vars): sorted indices of
  // variables with a nonzero one-count, letting distance computations touch
  // only the union of hits instead of every entry. Empty otherwise.
  std::vector<int> hits;
  double loglik = 0.0;
  int nn_index = -1;
  double nn_distance = std::numeric_limits<double>::infinity();
  bool active = true;

  ClusterNode() { ++detail::hac_node_allocations; }
};

struct MergeRecord {
  int left = 0;
  int right = 0;
  double distance = 0.0;
  double resulting_size = 0.0;
  int step = 0;
};

struct HacResult {
  std::vector<ClusterNode> clusters;   // K surviving clusters
  std::vector<MergeRecord> merges;
  std::vector<int> assignments;        // case -> final cluster index (0..K-1)
  std::vector<int> cardinalities;      // layout of the flattened counts
  double seconds = 0.0;
};

namespace detail {

inline double n_ln_n(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// t * ln(t) for integer t, precomputed once per agglomeration. All counts in
// HAC are (fractional representations of) integers, so table lookups replace
// log calls in the O(N^2) distance scans.
struct NLnNTable {
  std::vector<double> v;
  explicit NLnNTable(std::size_t max_count) {
    v.resize(max_count + 1);
    v[0] = 0.0;
    for (std::size_t t = 1; t < v.size(); ++t)
      v[t] = static_cast<double>(t) * std::log(static_cast<double>(t));
  }
  double operator()(double x) const { return v[static_cast<std::size_t>(x + 0.5)]; }
};

}  // namespace detail

// L_k = sum_i sum_v n ln(n/m) with the 0 ln 0 = 0 convention; always <= 0.
inline double cluster_loglik(const ClusterNode& node, int n_vars) {
  if (node.mass <= 0.0) throw SchemaError("cluster_loglik: zero mass");
  double s = 0.0;
  for (double c : node.counts) s += detail::n_ln_n(c);
  return s - n_vars * detail::n_ln_n(node.mass);
}

// d(k,l) = L_k + L_l - L_<k,l>: the drop in complete-data log-likelihood
// caused by the merge. Symmetric and >= 0 up to rounding.
inline double cluster_distance(const ClusterNode& a, const ClusterNode& b,
                               int n_vars) {
  const double m = a.mass + b.mass;
  double lm = 0.0;
  for (std::size_t e = 0; e < a.counts.size(); ++e)
    lm += detail::n_ln_n(a.counts[e] + b.counts[e]);
  lm -= n_vars * detail::n_ln_n(m);
  return a.loglik + b.loglik - lm;
}

namespace detail {

// Table-indexed variant of cluster_distance for integer-count nodes. On
// all-binary schemas only the union of hit variables is visited: a variable
// with merged one-count 0 contributes tab(0) + tab(m) - tab(m) = 0. The
// dense fallback skips entirely-zero merged entries for the same reason.
inline double merge_distance(const ClusterNode& a, const ClusterNode& b,
                             int n_vars, const NLnNTable& tab) {
  const double m = a.mass + b.mass;
  double lm = 0.0;
  if (a.counts.size() == 2 * static_cast<std::size_t>(n_vars)) {
    const double tm = tab(m);
    std::size_t ia = 0, ib = 0;
    const std::size_t na = a.hits.size(), nb = b.hits.size();
    while (ia < na || ib < nb) {
      double c1;
      if (ib == nb || (ia < na && a.hits[ia] < b.hits[ib])) {
        c1 = a.counts[2 * a.hits[ia] + 1];
        ++ia;
      } else if (ia == na || b.hits[ib] < a.hits[ia]) {
        c1 = b.counts[2 * b.hits[ib] + 1];
        ++ib;
      } else {
        c1 = a.counts[2 * a.hits[ia] + 1] + b.counts[2 * b.hits[ib] + 1];
        ++ia;
        ++ib;
      }
      lm += tab(c1) + tab(m - c1) - tm;
    }
    return a.loglik + b.loglik - lm;
  }
  for (std::size_t e = 0; e < a.counts.size(); ++e) {
    const double c = a.counts[e] + b.counts[e];
    if (c != 0.0) lm += tab(c);
  }
  lm -= n_vars * tab(m);
  return a.loglik + b.loglik - lm;
}

}  // namespace detail

// One node per case: mass 1, one-hot counts per variable, loglik 0.
inline std::vector<ClusterNode> singleton_stats(const Dataset& ds) {
  if (ds.n_cases() < 1) throw SchemaError("singleton_stats: empty dataset");
  const int n = ds.n_vars();
  const bool binary = ds.schema.all_binary();
  int total = 0;
  std::vector<int> offset(n);
  for (int i = 0; i < n; ++i) {
    offset[i] = total;
    total += ds.schema.cardinalities[i];
  }
  std::vector<ClusterNode> nodes(ds.n_cases());
  for (std::size_t j = 0; j < ds.n_cases(); ++j) {
    auto& node = nodes[j];
    node.mass = 1.0;
    node.counts.assign(total, 0.0);
    auto x = ds.row(j);
    for (int i = 0; i < n; ++i) node.counts[offset[i] + x[i]] = 1.0;
    if (binary)
      for (int i = 0; i < n; ++i)
        if (x[i] != 0) node.hits.push_back(i);
    node.loglik = 0.0;
  }
  return nodes;
}

// Elementwise sum of counts and mass; loglik recomputed from the merged
// counts; both inputs are deactivated.
inline ClusterNode merge(ClusterNode& a, ClusterNode& b, int n_vars) {
  if (!a.active || !b.active) throw SchemaError("merge: inactive input");
  ClusterNode out;
  out.mass = a.mass + b.mass;
  out.counts.resize(a.counts.size());
  for (std::size_t e = 0; e < a.counts.size(); ++e)
    out.counts[e] = a.counts[e] + b.counts[e];
  if (a.counts.size() == 2 * static_cast<std::size_t>(n_vars)) {
    out.hits.reserve(a.hits.size() + b.hits.size());
    std::set_union(a.hits.begin(), a.hits.end(), b.hits.begin(), b.hits.end(),
                   std::back_inserter(out.hits));
  }
  out.loglik = cluster_loglik(out, n_vars);
  a.active = false;
  b.active = false;
  return out;
}

// Agglomerate down to target_k clusters, repeatedly merging the globally
// closest active pair. Per-node nearest-neighbor caches keep memory at
// O(N * sum r_i): after a merge, distances from the new node to every active
// node are computed (improving their caches where possible) and any node
// whose cached neighbor died rescans eagerly. Distance ties break on the
// smallest (left, right) index pair. The merged cluster takes the smaller
// slot index, so a cluster's index is the smallest case index it contains.
inline HacResult run_hac(const Dataset& ds, int target_k) {
  const int N = static_cast<int>(ds.n_cases());
  if (target_k < 1 || target_k > N)
    throw SchemaError("run_hac: target_k out of range");
  const auto t0 = std::chrono::steady_clock::now();
  const int n = ds.n_vars();

  std::vector<ClusterNode> nodes = singleton_stats(ds);
  const detail::NLnNTable tab(static_cast<std::size_t>(N));

  // Initial all-pairs nearest-neighbor scan; increasing index order plus
  // strict improvement keeps the smallest partner among equals.
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      const double d = detail::merge_distance(nodes[i], nodes[j], n, tab);
      if (d < nodes[i].nn_distance) {
        nodes[i].nn_distance = d;
        nodes[i].nn_index = j;
      }
      if (d < nodes[j].nn_distance) {
        nodes[j].nn_distance = d;
        nodes[j].nn_index = i;
      }
    }

  std::vector<int> parent(N);
  std::iota(parent.begin(), parent.end(), 0);
  auto find_root = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };

  HacResult res;
  res.cardinalities = ds.schema.cardinalities;
  std::vector<int> dirty;

  int active_count = N;
  while (active_count > target_k) {
    // Globally closest pair = lexicographic min over (distance, left, right).
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    int bl = N, br = N;
    for (int i = 0; i < N; ++i) {
      const auto& node = nodes[i];
      if (!node.active) continue;
      const int l = std::min(i, node.nn_index);
      const int r = std::max(i, node.nn_index);
      if (node.nn_distance < bd ||
          (node.nn_distance == bd && (l < bl || (l == bl && r < br)))) {
        bd = node.nn_distance;
        bl = l;
        br = r;
        best = i;
      }
    }
    (void)best;
    const int a = bl;
    const int b = br;

    res.merges.push_back({a, b, bd, nodes[a].mass + nodes[b].mass,
                          static_cast<int>(res.merges.size())});
    nodes[a] = merge(nodes[a], nodes[b], n);
    parent[b] = a;
    --active_count;
    if (active_count <= target_k) break;

    // Refresh caches touching the merged pair.
    nodes[a].nn_index = -1;
    nodes[a].nn_distance = std::numeric_limits<double>::infinity();
    dirty.clear();
    for (int c = 0; c < N; ++c) {
      if (c == a || !nodes[c].active) continue;
      const double d = detail::merge_distance(nodes[a], nodes[c], n, tab);
      if (d < nodes[a].nn_distance) {
        nodes[a].nn_distance = d;
        nodes[a].nn_index = c;
      }
      if (nodes[c].nn_index == a || nodes[c].nn_index == b) {
        dirty.push_back(c);
      } else if (d < nodes[c].nn_distance ||
                 (d == nodes[c].nn_distance && a < nodes[c].nn_index)) {
        nodes[c].nn_distance = d;
        nodes[c].nn_index = a;
      }
    }
    for (int c : dirty) {
      nodes[c].nn_index = -1;
      nodes[c].nn_distance = std::numeric_limits<double>::infinity();
      if (active_count < 2) continue;
      for (int o = 0; o < N; ++o) {
        if (o == c || !nodes[o].active) continue;
        const double d = detail::merge_distance(nodes[c], nodes[o], n, tab);
        if (d < nodes[c].nn_distance) {
          nodes[c].nn_distance = d;
          nodes[c].nn_index = o;
        }
      }
    }
  }

  // Surviving slots, remapped to 0..K-1 in increasing slot order.
  std::vector<int> slot_to_cluster(N, -1);
  for (int i = 0; i < N; ++i)
    if (nodes[i].active) {
      slot_to_cluster[i] = static_cast<int>(res.clusters.size());
      res.clusters.push_back(std::move(nodes[i]));
    }
  res.assignments.resize(N);
  for (int j = 0; j < N; ++j) res.assignments[j] = slot_to_cluster[find_root(j)];
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// Pack the surviving clusters into a K-cluster SuffStats for map_estimate.
inline SuffStats hac_to_stats(const HacResult& res) {
  const int K = static_cast<int>(res.clusters.size());
  const int n = static_cast<int>(res.cardinalities.size());
  SuffStats s;
  s.K = K;
  s.mass.resize(K);
  s.counts.resize(K);
  for (int k = 0; k < K; ++k) {
    s.mass[k] = res.clusters[k].mass;
    s.counts[k].resize(n);
    int off = 0;
    for (int i = 0; i < n; ++i) {
      const int r = res.cardinalities[i];
      s.counts[k][i].assign(res.clusters[k].counts.begin() + off,
                            res.clusters[k].counts.begin() + off + r);
      off += r;
    }
  }
  return s;
}

}  // namespace mnclust
