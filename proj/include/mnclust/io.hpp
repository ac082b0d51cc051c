#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "mnclust/types.hpp"

namespace mnclust {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kLabelColumn = "__class";

// Shortest decimal rendering that round-trips the exact double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& tok, int line) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    throw ParseError("line " + std::to_string(line) + ": bad number '" + tok + "'");
  return v;
}

inline long parse_int(const std::string& tok, int line) {
  long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    throw ParseError("line " + std::to_string(line) + ": bad integer '" + tok + "'");
  return v;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  return f;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path);
  return f;
}

}  // namespace detail

// Dense CSV: header of variable names (optionally a __class label column),
// body rows of nonnegative integers.
inline void write_dataset_csv(const Dataset& ds, const std::string& path,
                              bool include_labels = true) {
  auto f = detail::open_out(path);
  const bool labels = include_labels && ds.labels.has_value();
  for (int i = 0; i < ds.n_vars(); ++i) {
    if (i) f << ',';
    f << ds.schema.names[i];
  }
  if (labels) f << ',' << kLabelColumn;
  f << '\n';
  for (std::size_t j = 0; j < ds.n_cases(); ++j) {
    auto r = ds.row(j);
    for (int i = 0; i < ds.n_vars(); ++i) {
      if (i) f << ',';
      f << r[i];
    }
    if (labels) f << ',' << (*ds.labels)[j];
    f << '\n';
  }
  if (!f) throw IoError("write failed: " + path);
}

// Optional sidecar schema: lines `name<TAB>cardinality` pinning cardinalities.
inline std::map<std::string, int> read_schema_sidecar(const std::string& path) {
  auto f = detail::open_in(path);
  std::map<std::string, int> pins;
  std::string line;
  int ln = 0;
  while (std::getline(f, line)) {
    ++ln;
    if (line.empty()) continue;
    auto toks = detail::split(line, '\t');
    if (toks.size() != 2)
      throw ParseError("schema line " + std::to_string(ln) + ": expected name<TAB>cardinality");
    pins[toks[0]] = static_cast<int>(parse_int(toks[1], ln));
  }
  return pins;
}

inline Dataset read_dataset_csv(const std::string& path,
                                const std::string& schema_path = "") {
  auto f = detail::open_in(path);
  std::string line;
  int ln = 0;
  if (!std::getline(f, line)) throw ParseError(path + ": empty file");
  ++ln;
  auto header = detail::split(line, ',');
  int label_col = -1;
  Dataset ds;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == kLabelColumn) {
      if (label_col >= 0) throw ParseError("duplicate " + std::string(kLabelColumn) + " column");
      label_col = static_cast<int>(c);
    } else {
      ds.schema.names.push_back(header[c]);
    }
  }
  if (ds.schema.names.empty()) throw ParseError(path + ": no variable columns");
  if (label_col >= 0) ds.labels.emplace();

  std::vector<std::int32_t> maxv(ds.schema.names.size(), 1);
  std::vector<std::int32_t> x(ds.schema.names.size());
  while (std::getline(f, line)) {
    ++ln;
    if (line.empty()) continue;
    auto toks = detail::split(line, ',');
    if (toks.size() != header.size())
      throw ParseError("line " + std::to_string(ln) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(toks.size()));
    int vi = 0;
    for (std::size_t c = 0; c < toks.size(); ++c) {
      const long v = parse_int(toks[c], ln);
      if (v < 0) throw ParseError("line " + std::to_string(ln) + ": negative value");
      if (static_cast<int>(c) == label_col) {
        ds.labels->push_back(static_cast<int>(v));
      } else {
        x[vi] = static_cast<std::int32_t>(v);
        maxv[vi] = std::max(maxv[vi], x[vi]);
        ++vi;
      }
    }
    ds.append_case(x);
  }

  ds.schema.cardinalities.resize(ds.schema.names.size());
  for (std::size_t i = 0; i < maxv.size(); ++i)
    ds.schema.cardinalities[i] = std::max(2, maxv[i] + 1);
  if (!schema_path.empty()) {
    const auto pins = read_schema_sidecar(schema_path);
    for (std::size_t i = 0; i < ds.schema.names.size(); ++i) {
      auto it = pins.find(ds.schema.names[i]);
      if (it == pins.end()) continue;
      if (maxv[i] >= it->second)
        throw ParseError("variable " + ds.schema.names[i] +
                         ": value exceeds pinned cardinality");
      ds.schema.cardinalities[i] = it->second;
    }
  }
  ds.validate();
  return ds;
}

// Sparse event format: one `case_id<TAB>var_id` line per hit; everything
// unlisted is 0 and all variables are binary.
inline Dataset read_dataset_sparse(const std::string& path) {
  auto f = detail::open_in(path);
  std::string line;
  int ln = 0;
  long max_case = -1, max_var = -1;
  std::vector<std::pair<long, long>> events;
  while (std::getline(f, line)) {
    ++ln;
    if (line.empty()) continue;
    auto toks = detail::split(line, '\t');
    if (toks.size() != 2)
      throw ParseError("line " + std::to_string(ln) + ": expected case_id<TAB>var_id");
    const long c = parse_int(toks[0], ln);
    const long v = parse_int(toks[1], ln);
    if (c < 0 || v < 0) throw ParseError("line " + std::to_string(ln) + ": negative id");
    events.emplace_back(c, v);
    max_case = std::max(max_case, c);
    max_var = std::max(max_var, v);
  }
  if (events.empty()) throw ParseError(path + ": no events");
  Dataset ds;
  ds.schema = VariableSchema::binary(static_cast<int>(max_var + 1));
  ds.num_cases = static_cast<std::size_t>(max_case + 1);
  ds.values.assign(ds.num_cases * ds.schema.cardinalities.size(), 0);
  for (auto [c, v] : events)
    ds.values[static_cast<std::size_t>(c) * ds.schema.cardinalities.size() + v] = 1;
  return ds;
}

enum class DatasetFormat { Auto, Dense, Sparse };

inline Dataset read_dataset(const std::string& path,
                            DatasetFormat format = DatasetFormat::Auto,
                            const std::string& schema_path = "") {
  if (format == DatasetFormat::Auto) {
    auto f = detail::open_in(path);
    std::string first;
    std::getline(f, first);
    const auto toks = detail::split(first, '\t');
    bool sparse = toks.size() == 2;
    if (sparse)
      for (const auto& t : toks)
        for (char ch : t)
          if (!std::isdigit(static_cast<unsigned char>(ch))) sparse = false;
    format = sparse ? DatasetFormat::Sparse : DatasetFormat::Dense;
  }
  return format == DatasetFormat::Sparse ? read_dataset_sparse(path)
                                         : read_dataset_csv(path, schema_path);
}

// Model persistence: plain-text header (K, schema) followed by full-precision
// probability tables. write -> read round-trips bit-exactly.
inline void write_model(const MixtureModel& model, const VariableSchema& schema,
                        const std::string& path) {
  auto f = detail::open_out(path);
  f << "mnclust-model 1\n";
  f << "K " << model.K << '\n';
  f << "vars " << schema.n_vars() << '\n';
  for (int i = 0; i < schema.n_vars(); ++i)
    f << "var " << schema.names[i] << ' ' << schema.cardinalities[i] << '\n';
  f << "lambda";
  for (double l : model.lambda) f << ' ' << format_double(l);
  f << '\n';
  for (int k = 0; k < model.K; ++k)
    for (int i = 0; i < schema.n_vars(); ++i) {
      f << "theta " << k << ' ' << i;
      for (double p : model.theta[k][i]) f << ' ' << format_double(p);
      f << '\n';
    }
  if (!f) throw IoError("write failed: " + path);
}

inline std::pair<MixtureModel, VariableSchema> read_model(const std::string& path) {
  auto f = detail::open_in(path);
  std::string line;
  int ln = 0;
  auto next = [&]() {
    if (!std::getline(f, line)) throw ParseError(path + ": truncated model file");
    ++ln;
    return detail::split(line, ' ');
  };
  auto head = next();
  if (head.size() != 2 || head[0] != "mnclust-model")
    throw ParseError(path + ": not a model file");
  auto ktoks = next();
  if (ktoks.size() != 2 || ktoks[0] != "K") throw ParseError("expected K line");
  const int K = static_cast<int>(parse_int(ktoks[1], ln));
  auto ntoks = next();
  if (ntoks.size() != 2 || ntoks[0] != "vars") throw ParseError("expected vars line");
  const int n = static_cast<int>(parse_int(ntoks[1], ln));

  VariableSchema schema;
  for (int i = 0; i < n; ++i) {
    auto t = next();
    if (t.size() != 3 || t[0] != "var") throw ParseError("expected var line");
    schema.names.push_back(t[1]);
    schema.cardinalities.push_back(static_cast<int>(parse_int(t[2], ln)));
  }
  MixtureModel m;
  m.K = K;
  auto lt = next();
  if (lt.size() != static_cast<std::size_t>(K + 1) || lt[0] != "lambda")
    throw ParseError("expected lambda line");
  for (int k = 0; k < K; ++k) m.lambda.push_back(parse_double(lt[k + 1], ln));
  m.theta.assign(K, std::vector<std::vector<double>>(n));
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < n; ++i) {
      auto t = next();
      if (t.size() != static_cast<std::size_t>(3 + schema.cardinalities[i]) ||
          t[0] != "theta")
        throw ParseError("line " + std::to_string(ln) + ": bad theta line");
      if (parse_int(t[1], ln) != k || parse_int(t[2], ln) != i)
        throw ParseError("line " + std::to_string(ln) + ": theta index mismatch");
      for (int v = 0; v < schema.cardinalities[i]; ++v)
        m.theta[k][i].push_back(parse_double(t[3 + v], ln));
    }
  return {std::move(m), std::move(schema)};
}

// Key-value manifest (one `key value` pair per line).
inline void write_manifest(const std::vector<std::pair<std::string, std::string>>& kv,
                           const std::string& path) {
  auto f = detail::open_out(path);
  for (const auto& [k, v] : kv) f << k << ' ' << v << '\n';
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace mnclust
