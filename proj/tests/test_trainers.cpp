#include <catch_amalgamated.hpp>

#include "helpers.hpp"
#include "mnclust/trainers.hpp"

using namespace mnclust;
using Catch::Approx;

TEST_CASE("e_step basics") {
  VariableSchema schema = VariableSchema::binary(2);
  Rng rng = make_rng(3);
  auto ds = testutil::random_dataset(schema, 3, rng);

  MixtureModel sym;
  sym.K = 2;
  sym.lambda = {0.5, 0.5};
  sym.theta = {{{0.3, 0.7}, {0.6, 0.4}}, {{0.3, 0.7}, {0.6, 0.4}}};
  auto [resp, ll] = e_step(sym, ds);
  for (std::size_t j = 0; j < ds.n_cases(); ++j) {
    CHECK(resp.at(j, 0) == Approx(0.5).margin(1e-15));
    CHECK(resp.at(j, 1) == Approx(0.5).margin(1e-15));
  }

  MixtureModel one = testutil::random_model(schema, 1, rng);
  auto [r1, l1] = e_step(one, ds);
  for (std::size_t j = 0; j < ds.n_cases(); ++j) CHECK(r1.at(j, 0) == 1.0);

  // rows equal per-case case_posterior calls
  auto m = testutil::random_model(schema, 3, rng);
  auto [r3, l3] = e_step(m, ds);
  double ll_sum = 0.0;
  for (std::size_t j = 0; j < ds.n_cases(); ++j) {
    auto p = case_posterior(m, ds.row(j));
    for (int k = 0; k < 3; ++k) REQUIRE(r3.at(j, k) == p[k]);
    auto lj = log_joint_case(m, ds.row(j));
    ll_sum += normalize_log_joint(lj, nullptr);
  }
  CHECK(l3 == Approx(ll_sum).margin(1e-12));
}

TEST_CASE("accumulate_stats") {
  VariableSchema schema = VariableSchema::binary(2);
  Rng rng = make_rng(5);
  auto ds = testutil::random_dataset(schema, 4, rng);

  // hard one-hot responsibilities reproduce integer tallies
  Responsibilities hard;
  hard.n_cases = 4;
  hard.K = 2;
  hard.p = {1, 0, 0, 1, 1, 0, 0, 1};
  auto s = accumulate_stats(hard, ds);
  std::vector<int> assign = {0, 1, 0, 1};
  auto tallies = stats_from_assignments(ds, assign, 2);
  for (int k = 0; k < 2; ++k) {
    CHECK(s.mass[k] == tallies.mass[k]);
    for (int i = 0; i < 2; ++i)
      for (int v = 0; v < 2; ++v)
        CHECK(s.counts[k][i][v] == tallies.counts[k][i][v]);
  }

  // uniform responsibilities split every marginal count in half
  Responsibilities half;
  half.n_cases = 4;
  half.K = 2;
  half.p.assign(8, 0.5);
  auto sh = accumulate_stats(half, ds);
  for (int i = 0; i < 2; ++i)
    for (int v = 0; v < 2; ++v)
      CHECK(sh.counts[0][i][v] == Approx(sh.counts[1][i][v]).margin(1e-15));

  // random responsibilities vs direct double-loop summation
  Responsibilities rr;
  rr.n_cases = 4;
  rr.K = 3;
  rr.p.resize(12);
  for (std::size_t j = 0; j < 4; ++j) {
    auto row = sample_dirichlet({1.0, 1.0, 1.0}, rng);
    for (int k = 0; k < 3; ++k) rr.p[j * 3 + k] = row[k];
  }
  auto sr = accumulate_stats(rr, ds);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 2; ++i)
      for (int v = 0; v < 2; ++v) {
        double expect = 0.0;
        for (std::size_t j = 0; j < 4; ++j)
          if (ds.row(j)[i] == v) expect += rr.at(j, k);
        REQUIRE(sr.counts[k][i][v] == Approx(expect).margin(1e-12));
      }
}

TEST_CASE("hard_assign") {
  VariableSchema schema = VariableSchema::binary(1);
  Dataset ds;
  ds.schema = schema;
  const std::int32_t c0[] = {0};
  ds.append_case(c0);

  Rng rng = make_rng(9);
  auto one = testutil::random_model(schema, 1, rng);
  CHECK(hard_assign(one, ds) == std::vector<int>{0});

  MixtureModel m;
  m.K = 2;
  m.lambda = {0.75, 0.25};
  m.theta = {{{0.9, 0.1}}, {{0.2, 0.8}}};
  CHECK(hard_assign(m, ds) == std::vector<int>{0});

  MixtureModel tie;
  tie.K = 2;
  tie.lambda = {0.5, 0.5};
  tie.theta = {{{0.3, 0.7}}, {{0.3, 0.7}}};
  CHECK(hard_assign(tie, ds) == std::vector<int>{0});
}

TEST_CASE("em_fit fixed point and separation") {
  // K=1: the one-class MAP model is a fixed point
  Rng rng = make_rng(17);
  auto ds = testutil::random_dataset(VariableSchema::binary(3), 30, rng);
  SuffStats s = stats_from_assignments(ds, std::vector<int>(30, 0), 1);
  MixtureModel fixed = map_estimate(s, DirichletPrior{2.0, 2.0});
  FitConfig cfg;
  auto res = em_fit(ds, fixed, cfg);
  CHECK(res.iterations == 1);
  CHECK(res.converged);

  // well-separated two-cluster toy data
  auto planted = testutil::planted_two_cluster(2, 50);
  MixtureModel init;
  init.K = 2;
  init.lambda = {0.5, 0.5};
  init.theta = {{{0.7, 0.3}, {0.7, 0.3}}, {{0.3, 0.7}, {0.3, 0.7}}};
  auto fit = em_fit(planted, init, cfg);
  CHECK(fit.model.lambda[0] == Approx(0.5).margin(0.05));
  // hand-computed MAP of the separated assignment: (50+1)/(50+2)
  CHECK(fit.model.theta[0][0][0] == Approx(51.0 / 52.0).margin(1e-3));
  CHECK(fit.model.theta[1][0][1] == Approx(51.0 / 52.0).margin(1e-3));
}

TEST_CASE("looser threshold never takes more iterations") {
  Rng rng = make_rng(19);
  auto ds = testutil::random_dataset(VariableSchema::binary(5), 80, rng);
  auto init = testutil::random_model(ds.schema, 3, rng);
  FitConfig tight;
  tight.rel_tol = 1e-6;
  FitConfig loose;
  loose.rel_tol = 4e-4;
  CHECK(em_fit(ds, init, loose).iterations <= em_fit(ds, init, tight).iterations);
}

TEST_CASE("cem_fit") {
  auto planted = testutil::planted_two_cluster(2, 50);
  MixtureModel init;
  init.K = 2;
  init.lambda = {0.5, 0.5};
  init.theta = {{{0.7, 0.3}, {0.7, 0.3}}, {{0.3, 0.7}, {0.3, 0.7}}};
  FitConfig cfg;
  auto res = cem_fit(planted, init, cfg);
  CHECK(res.converged);
  auto assign = hard_assign(res.model, planted);
  // recovers the planted partition exactly (up to label order fixed by init)
  for (int j = 0; j < 50; ++j) REQUIRE(assign[j] == assign[0]);
  for (int j = 50; j < 100; ++j) REQUIRE(assign[j] == assign[50]);
  REQUIRE(assign[0] != assign[50]);

  // a CEM fixed point converges after one iteration
  auto again = cem_fit(planted, res.model, cfg);
  CHECK(again.iterations == 1);

  // an empty cluster stays alive with prior-smoothed uniform tables
  MixtureModel wide;
  wide.K = 3;
  wide.lambda = {0.98, 0.01, 0.01};
  wide.theta = {{{0.5, 0.5}, {0.5, 0.5}},
                {{0.5, 0.5}, {0.5, 0.5}},
                {{0.5, 0.5}, {0.5, 0.5}}};
  auto r3 = cem_fit(planted, wide, cfg);
  REQUIRE(r3.model.K == 3);
  auto a3 = hard_assign(r3.model, planted);
  std::vector<int> mass(3, 0);
  for (int a : a3) ++mass[a];
  int empties = 0;
  for (int k = 0; k < 3; ++k)
    if (mass[k] == 0) {
      ++empties;
      for (int i = 0; i < 2; ++i)
        CHECK(r3.model.theta[k][i][0] == Approx(0.5).margin(1e-9));
    }
  CHECK(empties >= 1);
}

TEST_CASE("EM objective trace is non-decreasing on random instances") {
  Rng rng = make_rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    VariableSchema schema = VariableSchema::binary(1 + trial % 10);
    auto ds = testutil::random_dataset(schema, 20 + trial % 181, rng);
    auto init = testutil::random_model(schema, 1 + trial % 5, rng);
    FitConfig cfg;
    cfg.max_iters = 40;
    auto res = em_fit(ds, init, cfg);
    for (std::size_t t = 1; t < res.objective_trace.size(); ++t) {
      const double prev = res.objective_trace[t - 1];
      if (!std::isfinite(prev)) continue;
      REQUIRE(res.objective_trace[t] >=
              prev - 1e-9 * std::max(std::abs(prev), 1.0));
    }
  }
}

TEST_CASE("CEM terminates and its complete-data objective is monotone") {
  Rng rng = make_rng(37);
  int finished = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    VariableSchema schema = VariableSchema::binary(1 + trial % 10);
    auto ds = testutil::random_dataset(schema, 20 + trial % 181, rng);
    auto init = testutil::random_model(schema, 1 + trial % 5, rng);
    FitConfig cfg;
    auto res = cem_fit(ds, init, cfg);
    if (res.converged && res.iterations < cfg.max_iters) ++finished;
    for (std::size_t t = 1; t < res.objective_trace.size(); ++t) {
      const double prev = res.objective_trace[t - 1];
      if (!std::isfinite(prev)) continue;
      REQUIRE(res.objective_trace[t] >=
              prev - 1e-9 * std::max(std::abs(prev), 1.0));
    }
  }
  CHECK(finished >= 95);
}

TEST_CASE("EM with hardened responsibilities matches the CEM trajectory") {
  Rng rng = make_rng(41);
  auto ds = testutil::random_dataset(VariableSchema::binary(4), 60, rng);
  auto init = testutil::random_model(ds.schema, 3, rng);
  FitConfig cfg;
  auto cem = cem_fit(ds, init, cfg);

  // replay: hard E step, one-hot stats, MAP re-estimation
  MixtureModel model = init;
  std::vector<int> assign = hard_assign(model, ds);
  int iters = 0;
  while (iters < cfg.max_iters) {
    model = map_estimate(stats_from_assignments(ds, assign, 3), cfg.prior);
    auto next = hard_assign(model, ds);
    ++iters;
    if (next == assign) break;
    assign = next;
  }
  REQUIRE(iters == cem.iterations);
  for (int k = 0; k < 3; ++k) {
    REQUIRE(model.lambda[k] == cem.model.lambda[k]);
    for (int i = 0; i < 4; ++i)
      for (int v = 0; v < 2; ++v)
        REQUIRE(model.theta[k][i][v] == cem.model.theta[k][i][v]);
  }
}

TEST_CASE("trainers are bit-reproducible for fixed inputs") {
  Rng rng = make_rng(43);
  auto ds = testutil::random_dataset(VariableSchema::binary(6), 120, rng);
  auto init = testutil::random_model(ds.schema, 4, rng);
  FitConfig cfg;
  auto a = em_fit(ds, init, cfg);
  auto b = em_fit(ds, init, cfg);
  REQUIRE(a.iterations == b.iterations);
  REQUIRE(a.final_objective == b.final_objective);
  REQUIRE(a.model.lambda == b.model.lambda);
  REQUIRE(a.model.theta == b.model.theta);
  auto c = cem_fit(ds, init, cfg);
  auto d = cem_fit(ds, init, cfg);
  REQUIRE(c.model.theta == d.model.theta);
}

TEST_CASE("sparse fast path agrees with the dense scan") {
  // large all-binary dataset triggers the hit-list path; a copy with one
  // ternary variable forces the dense path on identical binary content
  Rng rng = make_rng(47);
  VariableSchema bin = VariableSchema::binary(40);
  auto ds = testutil::random_dataset(bin, 600, rng);
  REQUIRE(detail::use_binary_fast_path(ds));
  auto m = testutil::random_model(bin, 4, rng);

  Dataset wide = ds;
  wide.schema.cardinalities[0] = 3;  // value 2 never occurs
  REQUIRE_FALSE(detail::use_binary_fast_path(wide));
  auto mw = m;
  mw.theta[0][0] = {m.theta[0][0][0], m.theta[0][0][1], 0.0};
  mw.theta[1][0] = {m.theta[1][0][0], m.theta[1][0][1], 0.0};
  mw.theta[2][0] = {m.theta[2][0][0], m.theta[2][0][1], 0.0};
  mw.theta[3][0] = {m.theta[3][0][0], m.theta[3][0][1], 0.0};

  auto [ra, la] = e_step(m, ds);
  auto [rb, lb] = e_step(mw, wide);
  CHECK(la == Catch::Approx(lb).epsilon(1e-12));
  for (std::size_t j = 0; j < ds.n_cases(); ++j)
    for (int k = 0; k < 4; ++k)
      REQUIRE(ra.at(j, k) == Catch::Approx(rb.at(j, k)).margin(1e-12));
}
