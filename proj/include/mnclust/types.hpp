#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mnclust {

class SchemaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Discrete variables: names plus per-variable state counts r_i >= 2.
struct VariableSchema {
  std::vector<std::string> names;
  std::vector<int> cardinalities;

  int n_vars() const { return static_cast<int>(cardinalities.size()); }

  bool all_binary() const {
    for (int r : cardinalities)
      if (r != 2) return false;
    return true;
  }

  void validate() const {
    if (names.size() != cardinalities.size())
      throw SchemaError("schema: names/cardinalities length mismatch");
    if (cardinalities.empty()) throw SchemaError("schema: no variables");
    for (int r : cardinalities)
      if (r < 2) throw SchemaError("schema: cardinality < 2");
  }

  static VariableSchema binary(int n, const std::string& prefix = "v") {
    VariableSchema s;
    s.names.reserve(n);
    s.cardinalities.assign(n, 2);
    for (int i = 0; i < n; ++i) s.names.push_back(prefix + std::to_string(i));
    return s;
  }
};

// N cases over the schema, row-major; optional true class labels.
struct Dataset {
  VariableSchema schema;
  std::vector<std::int32_t> values;  // n_cases x n_vars, row-major
  std::size_t num_cases = 0;
  std::optional<std::vector<int>> labels;

  std::size_t n_cases() const { return num_cases; }
  int n_vars() const { return schema.n_vars(); }

  std::span<const std::int32_t> row(std::size_t j) const {
    return {values.data() + j * schema.cardinalities.size(),
            schema.cardinalities.size()};
  }

  void append_case(std::span<const std::int32_t> vals) {
    values.insert(values.end(), vals.begin(), vals.end());
    ++num_cases;
  }

  void validate() const {
    schema.validate();
    const std::size_t n = schema.cardinalities.size();
    if (values.size() != num_cases * n)
      throw SchemaError("dataset: value buffer size mismatch");
    for (std::size_t j = 0; j < num_cases; ++j) {
      auto r = row(j);
      for (std::size_t i = 0; i < n; ++i)
        if (r[i] < 0 || r[i] >= schema.cardinalities[i])
          throw SchemaError("dataset: value out of range for variable " +
                            schema.names[i]);
    }
    if (labels && labels->size() != num_cases)
      throw SchemaError("dataset: label vector length mismatch");
  }
};

// Class prior plus per-class, per-variable multinomial tables.
struct MixtureModel {
  int K = 0;
  std::vector<double> lambda;                            // length K
  std::vector<std::vector<std::vector<double>>> theta;   // [K][n][r_i]

  int n_vars() const { return theta.empty() ? 0 : static_cast<int>(theta[0].size()); }

  void validate() const {
    if (K < 1 || static_cast<int>(lambda.size()) != K ||
        static_cast<int>(theta.size()) != K)
      throw SchemaError("model: bad dimensions");
    double ls = 0.0;
    for (double l : lambda) {
      if (l < 0.0) throw SchemaError("model: negative lambda");
      ls += l;
    }
    if (std::abs(ls - 1.0) > 1e-9) throw SchemaError("model: lambda not normalized");
    for (const auto& cls : theta) {
      if (cls.size() != theta[0].size())
        throw SchemaError("model: ragged theta");
      for (const auto& tab : cls) {
        double s = 0.0;
        for (double p : tab) {
          if (p < 0.0) throw SchemaError("model: negative theta");
          s += p;
        }
        if (std::abs(s - 1.0) > 1e-9)
          throw SchemaError("model: theta row not normalized");
      }
    }
  }

  bool matches(const VariableSchema& s) const {
    if (theta.empty()) return false;
    if (static_cast<int>(theta[0].size()) != s.n_vars()) return false;
    for (int i = 0; i < s.n_vars(); ++i)
      if (static_cast<int>(theta[0][i].size()) != s.cardinalities[i]) return false;
    return true;
  }
};

// Per-cluster fractional case counts: the unit merged by HAC and accumulated
// by EM/CEM. counts[k][i][v] sums over v to mass[k] for every variable.
struct SuffStats {
  int K = 0;
  std::vector<double> mass;                              // length K
  std::vector<std::vector<std::vector<double>>> counts;  // [K][n][r_i]

  int n_vars() const { return counts.empty() ? 0 : static_cast<int>(counts[0].size()); }

  static SuffStats zeros(int K, const VariableSchema& schema) {
    SuffStats s;
    s.K = K;
    s.mass.assign(K, 0.0);
    s.counts.resize(K);
    for (auto& cls : s.counts) {
      cls.resize(schema.n_vars());
      for (int i = 0; i < schema.n_vars(); ++i)
        cls[i].assign(schema.cardinalities[i], 0.0);
    }
    return s;
  }

  void validate() const {
    if (K < 1 || static_cast<int>(mass.size()) != K ||
        static_cast<int>(counts.size()) != K)
      throw SchemaError("stats: bad dimensions");
    for (int k = 0; k < K; ++k) {
      if (mass[k] < 0.0) throw SchemaError("stats: negative mass");
      for (const auto& tab : counts[k]) {
        double s = 0.0;
        for (double c : tab) {
          if (c < 0.0) throw SchemaError("stats: negative count");
          s += c;
        }
        const double scale = std::max(1.0, mass[k]);
        if (std::abs(s - mass[k]) > 1e-6 * scale)
          throw SchemaError("stats: counts do not sum to mass");
      }
    }
  }
};

// Symmetric Dirichlet hyperparameters. alpha = 1 is the ML special case;
// the default alpha = 2 makes MAP interior (add-one smoothing).
struct DirichletPrior {
  double alpha_class = 2.0;
  double alpha_theta = 2.0;

  void validate() const {
    if (alpha_class < 1.0 || alpha_theta < 1.0)
      throw SchemaError("prior: alpha must be >= 1");
  }

  static DirichletPrior ml() { return {1.0, 1.0}; }
};

// N x K row-stochastic posterior class memberships, row-major.
struct Responsibilities {
  std::size_t n_cases = 0;
  int K = 0;
  std::vector<double> p;

  double at(std::size_t j, int k) const { return p[j * K + k]; }
  std::span<const double> row(std::size_t j) const { return {p.data() + j * K, static_cast<std::size_t>(K)}; }
  std::span<double> row(std::size_t j) { return {p.data() + j * K, static_cast<std::size_t>(K)}; }
};

}  // namespace mnclust
