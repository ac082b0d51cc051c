// Command-line harness: synthetic data generation, model fitting, K sweeps,
// evaluation, and benchmark reports for multinomial-mixture clustering.

#include <CLI11.hpp>

#include "mnclust/cli.hpp"

namespace {

using namespace mnclust;

void add_prior_flags(CLI::App* app, DirichletPrior* prior) {
  app->add_option("--alpha-class", prior->alpha_class, "class-prior Dirichlet alpha");
  app->add_option("--alpha-theta", prior->alpha_theta, "table Dirichlet alpha");
}

void add_fit_flags(CLI::App* app, FitConfig* fit, std::string* objective) {
  app->add_option("--max-iters", fit->max_iters, "iteration cap");
  app->add_option("--rel-tol", fit->rel_tol, "relative convergence threshold");
  app->add_option("--objective", *objective, "map|ml")->check(CLI::IsMember({"map", "ml"}));
  add_prior_flags(app, &fit->prior);
}

void add_init_flags(CLI::App* app, InitConfig* init, std::string* method) {
  app->add_option("--init", *method, "random|marginal|hac")
      ->check(CLI::IsMember({"random", "marginal", "hac"}));
  app->add_option("--seed", init->seed, "run seed");
  app->add_option("--marginal-ess", init->marginal_ess, "noisy-marginal sample size");
  app->add_option("--hac-subsample", init->hac_subsample, "HAC init subsample size");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multinomial-mixture clustering harness"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  cli::GenOptions gen_opt;
  gen->add_option("--out", gen_opt.out_dir, "output directory")->required();
  gen->add_option("--seed", gen_opt.cfg.seed, "generator seed");
  gen->add_option("--cases", gen_opt.cfg.train_n, "training cases");
  gen->add_option("--test-cases", gen_opt.cfg.test_n, "test cases");
  gen->add_option("--vars", gen_opt.cfg.n_total, "variables before discarding");
  gen->add_option("--keep", gen_opt.cfg.n_keep, "variables kept");
  gen->add_option("--zipf-exponent", gen_opt.cfg.zipf_exponent, "marginal decay exponent");
  gen->add_option("--p-max", gen_opt.cfg.p_max, "largest marginal hit rate");
  gen->add_option("--p-min", gen_opt.cfg.p_min, "marginal hit rate floor");
  gen->add_flag("!--noise-variance", gen_opt.cfg.noise_as_stddev,
                "read N(m, x) with x as a variance, not a standard deviation");
  gen->add_option("--noise-scale", gen_opt.cfg.noise_scale, "perturbation scale");

  // fit
  auto* fit = app.add_subcommand("fit", "fit one model");
  cli::FitOptions fit_opt;
  std::string fit_algo = "em", fit_init = "marginal", fit_obj = "map";
  fit->add_option("--data", fit_opt.data_path, "training CSV / sparse events")->required();
  fit->add_option("--schema", fit_opt.schema_path, "sidecar schema file");
  fit->add_option("--algo", fit_algo, "em|cem|hac")->check(CLI::IsMember({"em", "cem", "hac"}));
  fit->add_option("--k", fit_opt.k, "number of clusters")->required();
  add_init_flags(fit, &fit_opt.init, &fit_init);
  add_fit_flags(fit, &fit_opt.fit, &fit_obj);
  fit->add_option("--model-out", fit_opt.model_out, "model file to write");
  fit->add_option("--record-out", fit_opt.record_out, "run record to write");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "model-structure search over K");
  cli::SweepOptions sweep_opt;
  std::string sweep_algo = "em", sweep_init = "marginal", sweep_obj = "map";
  sweep->add_option("--data", sweep_opt.data_path, "training data")->required();
  sweep->add_option("--schema", sweep_opt.schema_path, "sidecar schema file");
  sweep->add_option("--algo", sweep_algo, "em|cem|hac")->check(CLI::IsMember({"em", "cem", "hac"}));
  sweep->add_option("--kmin", sweep_opt.sweep.k_min, "smallest K")->required();
  sweep->add_option("--kmax", sweep_opt.sweep.k_max, "largest K")->required();
  sweep->add_option("--runs-per-k", sweep_opt.sweep.runs_per_k, "restarts per K");
  add_init_flags(sweep, &sweep_opt.sweep.init, &sweep_init);
  add_fit_flags(sweep, &sweep_opt.sweep.fit, &sweep_obj);
  sweep->add_option("--score-alpha", sweep_opt.sweep.score_prior.alpha_theta,
                    "Dirichlet alpha of the marginal-likelihood score");
  sweep->add_option("--out", sweep_opt.out_path, "per-K score table (TSV)");
  sweep->add_option("--model-out", sweep_opt.model_out, "model at K*");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a model file on a dataset");
  cli::EvalOptions eval_opt;
  eval->add_option("--model", eval_opt.model_path, "model file")->required();
  eval->add_option("--data", eval_opt.data_path, "evaluation data")->required();
  eval->add_option("--schema", eval_opt.schema_path, "sidecar schema file");
  eval->add_option("--out", eval_opt.out_path, "report file");

  // bench
  auto* bench = app.add_subcommand("bench", "condition x seed benchmark matrix");
  cli::BenchOptions bench_opt;
  std::vector<std::string> bench_algos = {"em", "cem"};
  std::vector<std::string> bench_inits = {"marginal"};
  std::string bench_obj = "map", preset = "none";
  bench->add_option("--train", bench_opt.train_path, "training data")->required();
  bench->add_option("--test", bench_opt.test_path, "test data")->required();
  bench->add_option("--schema", bench_opt.schema_path, "sidecar schema file");
  bench->add_option("--algos", bench_algos, "algorithms to compare")->delimiter(',');
  bench->add_option("--inits", bench_inits, "initialization methods")->delimiter(',');
  bench->add_option("--seeds", bench_opt.seeds, "run seeds")->delimiter(',');
  bench->add_option("--kmin", bench_opt.k_min, "smallest K");
  bench->add_option("--kmax", bench_opt.k_max, "largest K");
  add_fit_flags(bench, &bench_opt.fit, &bench_obj);
  bench->add_option("--marginal-ess", bench_opt.init_template.marginal_ess,
                    "noisy-marginal sample size");
  bench->add_option("--hac-subsample", bench_opt.init_template.hac_subsample,
                    "HAC init subsample size");
  bench->add_option("--score-alpha", bench_opt.score_prior.alpha_theta,
                    "Dirichlet alpha of the marginal-likelihood score");
  bench->add_option("--preset", preset,
                    "none|runtime-eq-synth|runtime-eq-digits (EM threshold presets)")
      ->check(CLI::IsMember({"none", "runtime-eq-synth", "runtime-eq-digits"}));
  bench->add_option("--out", bench_opt.out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) {
      cli::run_gen(gen_opt);
    } else if (*fit) {
      fit_opt.algo = parse_algorithm(fit_algo);
      fit_opt.init.method = parse_init_method(fit_init);
      fit_opt.fit.objective = fit_obj == "ml" ? Objective::Ml : Objective::Map;
      cli::run_fit(fit_opt);
    } else if (*sweep) {
      sweep_opt.sweep.algo = parse_algorithm(sweep_algo);
      sweep_opt.sweep.init.method = parse_init_method(sweep_init);
      sweep_opt.sweep.fit.objective = sweep_obj == "ml" ? Objective::Ml : Objective::Map;
      sweep_opt.sweep.score_prior.alpha_class = sweep_opt.sweep.score_prior.alpha_theta;
      auto res = cli::run_sweep(sweep_opt);
      std::cout << "k_star " << res.k_star << '\n';
    } else if (*eval) {
      auto rep = cli::run_eval(eval_opt);
      std::cout << "holdout_l_bits " << mnclust::format_double(rep.holdout_l_bits) << '\n';
      std::cout << "effective_k " << rep.effective_k << '\n';
      if (rep.class_acc)
        std::cout << "class_acc " << mnclust::format_double(*rep.class_acc) << '\n';
    } else if (*bench) {
      bench_opt.algos.clear();
      for (const auto& a : bench_algos)
        bench_opt.algos.push_back(parse_algorithm(a));
      bench_opt.inits.clear();
      for (const auto& i : bench_inits)
        bench_opt.inits.push_back(parse_init_method(i));
      bench_opt.fit.objective = bench_obj == "ml" ? Objective::Ml : Objective::Map;
      bench_opt.score_prior.alpha_class = bench_opt.score_prior.alpha_theta;
      if (preset == "runtime-eq-synth") bench_opt.em_rel_tol = 4e-4;
      if (preset == "runtime-eq-digits") bench_opt.em_rel_tol = 1e-3;
      auto res = cli::run_bench(bench_opt);
      if (res.failures) return 1;
    }
  } catch (const mnclust::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const mnclust::SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
