#pragma once

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>

#include "mnclust/eval.hpp"
#include "mnclust/io.hpp"
#include "mnclust/selection.hpp"
#include "mnclust/synthgen.hpp"

namespace mnclust::cli {

namespace fs = std::filesystem;

struct GenOptions {
  GenConfig cfg;
  std::string out_dir = ".";
};

inline void run_gen(const GenOptions& opt) {
  opt.cfg.validate();
  fs::create_directories(opt.out_dir);
  SynthData data = generate_synthetic(opt.cfg);
  write_dataset_csv(data.train, (fs::path(opt.out_dir) / "train.csv").string());
  write_dataset_csv(data.test, (fs::path(opt.out_dir) / "test.csv").string());

  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("seed", std::to_string(opt.cfg.seed));
  kv.emplace_back("n_total", std::to_string(opt.cfg.n_total));
  kv.emplace_back("n_keep", std::to_string(opt.cfg.n_keep));
  kv.emplace_back("train_n", std::to_string(opt.cfg.train_n));
  kv.emplace_back("test_n", std::to_string(opt.cfg.test_n));
  kv.emplace_back("zipf_exponent", format_double(opt.cfg.zipf_exponent));
  kv.emplace_back("p_max", format_double(opt.cfg.p_max));
  kv.emplace_back("p_min", format_double(opt.cfg.p_min));
  kv.emplace_back("noise_as_stddev", opt.cfg.noise_as_stddev ? "1" : "0");
  kv.emplace_back("noise_scale", format_double(opt.cfg.noise_scale));
  kv.emplace_back("mean_parent_count",
                  format_double(data.generator.mean_parent_count()));
  std::string retained;
  for (std::size_t i = 0; i < data.retained.size(); ++i) {
    if (i) retained += ',';
    retained += std::to_string(data.retained[i]);
  }
  kv.emplace_back("retained_variables", retained);
  write_manifest(kv, (fs::path(opt.out_dir) / "manifest.txt").string());
}

struct FitOptions {
  std::string data_path;
  std::string schema_path;
  Algorithm algo = Algorithm::Em;
  InitConfig init;
  int k = 2;
  FitConfig fit;
  std::string model_out;
  std::string record_out;
};

struct FitOutcome {
  MixtureModel model;
  double init_seconds = 0.0;
  double fit_seconds = 0.0;
  int iterations = 0;
  bool converged = true;
  double final_objective = 0.0;
};

inline FitOutcome fit_once(const Dataset& ds, Algorithm algo, int k,
                           const InitConfig& init_cfg, const FitConfig& fit_cfg) {
  FitOutcome out;
  if (algo == Algorithm::Hac) {
    const auto t0 = std::chrono::steady_clock::now();
    HacResult hr = run_hac(ds, k);
    out.model = map_estimate(hac_to_stats(hr), fit_cfg.prior);
    out.fit_seconds = hr.seconds;
    out.iterations = static_cast<int>(hr.merges.size());
    out.final_objective = log_likelihood(out.model, ds).total_nats;
    (void)t0;
    return out;
  }
  const auto t0 = std::chrono::steady_clock::now();
  MixtureModel start = make_init(ds, k, init_cfg);
  out.init_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  FitResult fr = algo == Algorithm::Em ? em_fit(ds, start, fit_cfg)
                                       : cem_fit(ds, start, fit_cfg);
  out.model = std::move(fr.model);
  out.fit_seconds = fr.seconds;
  out.iterations = fr.iterations;
  out.converged = fr.converged;
  out.final_objective = fr.final_objective;
  return out;
}

inline void run_fit(const FitOptions& opt) {
  Dataset ds = read_dataset(opt.data_path, DatasetFormat::Auto, opt.schema_path);
  InitConfig init = opt.init;
  init.seed = split_seed(opt.init.seed, SeedStream::Init);
  FitOutcome out = fit_once(ds, opt.algo, opt.k, init, opt.fit);
  if (!opt.model_out.empty()) write_model(out.model, ds.schema, opt.model_out);
  if (!opt.record_out.empty()) {
    write_manifest({{"algorithm", to_string(opt.algo)},
                    {"init", to_string(opt.init.method)},
                    {"k", std::to_string(opt.k)},
                    {"seed", std::to_string(opt.init.seed)},
                    {"iterations", std::to_string(out.iterations)},
                    {"converged", out.converged ? "1" : "0"},
                    {"final_objective", format_double(out.final_objective)},
                    {"init_seconds", format_double(out.init_seconds)},
                    {"fit_seconds", format_double(out.fit_seconds)}},
                   opt.record_out);
  }
}

struct SweepOptions {
  std::string data_path;
  std::string schema_path;
  SweepConfig sweep;
  std::string out_path;    // per-K score table (TSV)
  std::string model_out;   // model at K*, optional
};

inline SweepResult run_sweep(const SweepOptions& opt, const Dataset* preloaded = nullptr) {
  Dataset loaded;
  const Dataset* ds = preloaded;
  if (!ds) {
    loaded = read_dataset(opt.data_path, DatasetFormat::Auto, opt.schema_path);
    ds = &loaded;
  }
  SweepResult res =
      opt.sweep.algo == Algorithm::Hac
          ? sweep_hac(*ds, opt.sweep.k_min, opt.sweep.k_max, opt.sweep.fit.prior,
                      opt.sweep.score_prior)
          : sweep_k(*ds, opt.sweep);
  if (!opt.out_path.empty()) {
    auto f = detail::open_out(opt.out_path);
    f << "k\tcs_bits_per_case\titerations\tconverged\tinit_seconds\tfit_seconds\n";
    for (const auto& e : res.entries)
      f << e.k << '\t' << format_double(e.cs_bits) << '\t' << e.iterations << '\t'
        << (e.converged ? 1 : 0) << '\t' << format_double(e.init_seconds) << '\t'
        << format_double(e.fit_seconds) << '\n';
    f << "k_star\t" << res.k_star << '\n';
  }
  if (!opt.model_out.empty())
    write_model(res.best().model, ds->schema, opt.model_out);
  return res;
}

struct EvalOptions {
  std::string model_path;
  std::string data_path;
  std::string schema_path;
  std::string out_path;
};

inline EvalReport run_eval(const EvalOptions& opt) {
  auto [model, schema] = read_model(opt.model_path);
  Dataset ds = read_dataset(opt.data_path, DatasetFormat::Auto, opt.schema_path);
  if (!model.matches(ds.schema))
    throw SchemaError("eval: model does not match dataset schema");
  EvalReport rep;
  rep.k_star = model.K;
  rep.holdout_l_bits = holdout_logl(model, ds);
  auto [resp, ll] = e_step(model, ds);
  rep.effective_k = effective_cluster_count(resp);
  if (ds.labels) rep.class_acc = classification_accuracy(confusion(model, ds));
  if (!opt.out_path.empty()) {
    std::vector<std::pair<std::string, std::string>> kv = {
        {"k", std::to_string(rep.k_star)},
        {"effective_k", std::to_string(rep.effective_k)},
        {"holdout_l_bits", format_double(rep.holdout_l_bits)}};
    if (rep.class_acc) kv.emplace_back("class_acc", format_double(*rep.class_acc));
    write_manifest(kv, opt.out_path);
  }
  return rep;
}

// One benchmark run: (algorithm, init, seed) -> sweep, evaluate at K*.
struct RunRecord {
  std::string algo;
  std::string init;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  int k_star = 0;
  int effective_k = 0;
  double marginal_l_bits = 0.0;
  double holdout_l_bits = 0.0;
  std::optional<double> class_acc;
  double init_seconds = 0.0;
  double fit_seconds = 0.0;
  double score_seconds = 0.0;
  // Runtime normalized by selected cluster count, with and without init time.
  double min_per_class_excl = 0.0;
  double min_per_class_incl = 0.0;
};

struct BenchOptions {
  std::string train_path;
  std::string test_path;
  std::string schema_path;
  std::vector<Algorithm> algos = {Algorithm::Em, Algorithm::Cem};
  std::vector<InitMethod> inits = {InitMethod::Marginal};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  int k_min = 1;
  int k_max = 14;
  FitConfig fit;
  InitConfig init_template;
  DirichletPrior score_prior{1.0, 1.0};
  double em_rel_tol = 0.0;  // 0 = use fit.rel_tol; presets set 4e-4 / 1e-3
  std::string out_dir = ".";
};

inline RunRecord bench_run(const Dataset& train, const Dataset& test,
                           Algorithm algo, InitMethod init, std::uint64_t seed,
                           const BenchOptions& opt) {
  RunRecord rec;
  rec.algo = to_string(algo);
  rec.init = to_string(init);
  rec.seed = seed;
  try {
    SweepConfig sc;
    sc.k_min = opt.k_min;
    sc.k_max = opt.k_max;
    sc.fit = opt.fit;
    if (algo == Algorithm::Em && opt.em_rel_tol > 0.0)
      sc.fit.rel_tol = opt.em_rel_tol;
    sc.init = opt.init_template;
    sc.init.method = init;
    sc.init.seed = seed;
    sc.algo = algo;
    sc.score_prior = opt.score_prior;

    SweepResult sr = algo == Algorithm::Hac
                         ? sweep_hac(train, sc.k_min, sc.k_max, sc.fit.prior,
                                     sc.score_prior)
                         : sweep_k(train, sc);
    const SweepEntry& best = sr.best();

    const auto t0 = std::chrono::steady_clock::now();
    rec.k_star = sr.k_star;
    rec.marginal_l_bits = best.cs_bits;
    rec.holdout_l_bits = holdout_logl(best.model, test);
    auto [resp, ll] = e_step(best.model, train);
    rec.effective_k = effective_cluster_count(resp);
    if (test.labels)
      rec.class_acc = classification_accuracy(confusion(best.model, test));
    rec.score_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.init_seconds = best.init_seconds;
    rec.fit_seconds = best.fit_seconds;
    rec.min_per_class_excl = best.fit_seconds / 60.0 / std::max(1, sr.k_star);
    rec.min_per_class_incl =
        (best.fit_seconds + best.init_seconds) / 60.0 / std::max(1, sr.k_star);
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample stddev; undefined (reported empty) for n = 1
  int n = 0;
};

inline Aggregate aggregate(const std::vector<double>& xs) {
  Aggregate a;
  a.n = static_cast<int>(xs.size());
  if (a.n == 0) return a;
  for (double x : xs) a.mean += x;
  a.mean /= a.n;
  if (a.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - a.mean) * (x - a.mean);
    a.stddev = std::sqrt(ss / (a.n - 1));
  }
  return a;
}

struct BenchResult {
  std::vector<RunRecord> runs;
  int failures = 0;
};

inline void write_raw_runs(const std::vector<RunRecord>& runs,
                           const std::string& path) {
  auto f = detail::open_out(path);
  f << "algo\tinit\tseed\tok\tk_star\teffective_k\tmarginal_l_bits\t"
       "holdout_l_bits\tclass_acc\tinit_seconds\tfit_seconds\tscore_seconds\t"
       "min_per_class_excl\tmin_per_class_incl\terror\n";
  for (const auto& r : runs) {
    f << r.algo << '\t' << r.init << '\t' << r.seed << '\t' << (r.ok ? 1 : 0)
      << '\t' << r.k_star << '\t' << r.effective_k << '\t'
      << format_double(r.marginal_l_bits) << '\t'
      << format_double(r.holdout_l_bits) << '\t'
      << (r.class_acc ? format_double(*r.class_acc) : std::string("")) << '\t'
      << format_double(r.init_seconds) << '\t' << format_double(r.fit_seconds)
      << '\t' << format_double(r.score_seconds) << '\t'
      << format_double(r.min_per_class_excl) << '\t'
      << format_double(r.min_per_class_incl) << '\t' << r.error << '\n';
  }
}

inline BenchResult run_bench(const BenchOptions& opt) {
  Dataset train = read_dataset(opt.train_path, DatasetFormat::Auto, opt.schema_path);
  Dataset test = read_dataset(opt.test_path, DatasetFormat::Auto, opt.schema_path);
  if (opt.seeds.empty()) throw SchemaError("bench: no seeds");
  fs::create_directories(opt.out_dir);

  BenchResult res;
  for (Algorithm algo : opt.algos)
    for (InitMethod init : opt.inits)
      for (std::uint64_t seed : opt.seeds) {
        RunRecord rec = bench_run(train, test, algo, init, seed, opt);
        if (!rec.ok) ++res.failures;
        res.runs.push_back(std::move(rec));
      }

  write_raw_runs(res.runs, (fs::path(opt.out_dir) / "raw_runs.tsv").string());

  // Per-condition mean +/- sample stddev over successful runs.
  struct Criterion {
    const char* name;
    double (*get)(const RunRecord&);
  };
  static const Criterion criteria[] = {
      {"marginal_l_bits", [](const RunRecord& r) { return r.marginal_l_bits; }},
      {"k_star", [](const RunRecord& r) { return static_cast<double>(r.k_star); }},
      {"holdout_l_bits", [](const RunRecord& r) { return r.holdout_l_bits; }},
      {"class_acc", [](const RunRecord& r) { return r.class_acc.value_or(std::nan("")); }},
      {"effective_k", [](const RunRecord& r) { return static_cast<double>(r.effective_k); }},
      {"min_per_class_excl", [](const RunRecord& r) { return r.min_per_class_excl; }},
      {"min_per_class_incl", [](const RunRecord& r) { return r.min_per_class_incl; }},
  };

  auto tsv = detail::open_out((fs::path(opt.out_dir) / "report.tsv").string());
  std::ostringstream txt;
  tsv << "algo\tinit\truns";
  for (const auto& c : criteria) tsv << '\t' << c.name << "_mean\t" << c.name << "_sd";
  tsv << '\n';
  txt << std::left << std::setw(18) << "condition" << std::setw(6) << "runs";
  for (const auto& c : criteria) txt << std::setw(26) << c.name;
  txt << '\n';

  for (Algorithm algo : opt.algos)
    for (InitMethod init : opt.inits) {
      std::vector<const RunRecord*> ok;
      for (const auto& r : res.runs)
        if (r.ok && r.algo == to_string(algo) && r.init == to_string(init))
          ok.push_back(&r);
      tsv << to_string(algo) << '\t' << to_string(init) << '\t' << ok.size();
      txt << std::left << std::setw(18) << (to_string(algo) + "+" + to_string(init))
          << std::setw(6) << ok.size();
      for (const auto& c : criteria) {
        std::vector<double> xs;
        for (const auto* r : ok) {
          const double v = c.get(*r);
          if (!std::isnan(v)) xs.push_back(v);
        }
        const Aggregate a = aggregate(xs);
        tsv << '\t' << (a.n ? format_double(a.mean) : std::string(""));
        tsv << '\t' << (a.n > 1 ? format_double(a.stddev) : std::string(""));
        std::ostringstream cell;
        if (a.n) {
          cell << std::fixed << std::setprecision(4) << a.mean;
          if (a.n > 1) cell << " +/- " << std::setprecision(4) << a.stddev;
        }
        txt << std::setw(26) << cell.str();
      }
      tsv << '\n';
      txt << '\n';
    }

  auto txtf = detail::open_out((fs::path(opt.out_dir) / "report.txt").string());
  txtf << txt.str();
  if (res.failures)
    std::cerr << "warning: " << res.failures << " run(s) failed\n";
  return res;
}

}  // namespace mnclust::cli
