#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "pots/harness.hpp"
#include "pots/numeric.hpp"

using namespace pots;

namespace {

ExperimentPlan lp_plan(long long M, int threads) {
  ExperimentPlan plan;
  plan.scenario = fixtures::s1();
  plan.t_grid = {100, 200, 400, 800};
  plan.replications = M;
  EstimatorSetting s;
  s.kind = EstimatorKind::LpOls;
  s.name = "lp_ols";
  s.p = 1;
  plan.estimators = {s};
  plan.parallelism = threads;
  plan.master_seed = 42;
  return plan;
}

}  // namespace

TEST_CASE("one replication reproduces the single pipeline") {
  const ExperimentPlan plan = lp_plan(1, 1);
  const MetricsTable t = run_replications(plan);
  const ScenarioSpec s = plan.scenario.with_horizon(200);
  const EstimateReport r = lp_ols(simulate(s, draw_noise(s, 42, 0)), 1);
  const MetricsCell& c = t.at("lp_ols", 200);
  CHECK(c.mean == r.point);
  CHECK(c.mean_se == r.std_error);
  CHECK(c.sd == 0.0);
  CHECK(c.target == 1.0);
  CHECK(c.bias == r.point - 1.0);
}

TEST_CASE("results do not depend on the worker count") {
  const MetricsTable a = run_replications(lp_plan(60, 1));
  const MetricsTable b = run_replications(lp_plan(60, 8));
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].estimates == b.cells[i].estimates);
    CHECK(a.cells[i].mean == b.cells[i].mean);
    CHECK(a.cells[i].rmse == b.cells[i].rmse);
    CHECK(a.cells[i].ks == b.cells[i].ks);
  }
}

TEST_CASE("metric identities") {
  const MetricsTable t = run_replications(lp_plan(80, 4));
  for (const auto& c : t.cells) {
    CHECK(c.rmse * c.rmse == doctest::Approx(c.bias * c.bias + c.sd * c.sd).epsilon(1e-12));
    CHECK(c.coverage >= 0.0);
    CHECK(c.coverage <= 1.0);
  }
}

TEST_CASE("S1 lp_ols at T = 10^4 is unbiased") {
  ExperimentPlan plan = lp_plan(500, 8);
  plan.t_grid = {10000};
  const MetricsCell& c = run_replications(plan).at("lp_ols", 10000);
  CHECK(std::abs(c.bias) < 3 * c.sd / std::sqrt(500.0));
}

TEST_CASE("RMSE falls along the grid") {
  const MetricsTable t = run_replications(lp_plan(500, 8));
  const auto cells = t.for_estimator("lp_ols");
  for (std::size_t i = 1; i < cells.size(); ++i) CHECK(cells[i]->rmse < cells[i - 1]->rmse);
}

TEST_CASE("rate_slope") {
  const std::vector<double> T{400, 800, 1600, 3200, 6400};
  std::vector<double> r;
  for (double x : T) r.push_back(std::pow(x, -0.5));
  const SlopeFit f = rate_slope(T, r);
  CHECK(f.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(f.se < 1e-12);
  CHECK(f.points == 5);
  CHECK_THROWS_AS(rate_slope({1, 2, 3}, {1, 2, 3}), PreconditionError);
}

TEST_CASE("normality_check") {
  SeedStream s(42, 0, Channel::U);
  std::vector<double> z(2000);
  for (auto& x : z) x = s.normal();
  CHECK(normality_check(z) < 0.04);
  for (auto& x : z) x = s.uniform() * 4 - 2;
  CHECK(normality_check(z) > 0.04);
}

TEST_CASE("zero standard errors are excluded from the KS statistic") {
  ExperimentPlan plan;
  plan.scenario = fixtures::s3(20);
  plan.t_grid = {20};
  plan.replications = 5;
  EstimatorSetting s;
  s.kind = EstimatorKind::HtLagp;
  s.name = "ht";
  s.w = 1.0;
  s.wprime = 1.0;
  plan.estimators = {s};
  const MetricsCell& c = run_replications(plan).at("ht", 20);
  CHECK(c.se_zero_excluded == 5);
  CHECK(std::isnan(c.ks));
  CHECK(coverage(run_replications(plan)).front().coverage == 1.0);
}

TEST_CASE("plan validation") {
  const nlohmann::json base = {
      {"scenario", nlohmann::json::parse(serialize_scenario(fixtures::s3(10)))},
      {"t_grid", {100, 200}},
      {"replications", 50},
      {"estimators", {{{"kind", "ht_lagp"}, {"p", 1}}}}};
  CHECK_NOTHROW(parse_plan(base));
  auto bad = base;
  bad["t_grid"] = {200, 100};
  CHECK_THROWS_AS(parse_plan(bad), ConfigError);
  bad = base;
  bad["replications"] = 49;
  CHECK_THROWS_AS(parse_plan(bad), ConfigError);
  bad = base;
  bad["estimators"] = {{{"kind", "kernel_lagp"}}};
  CHECK_THROWS_AS(parse_plan(bad), PreconditionError);
  bad = base;
  bad["estimators"] = {{{"kind", "lp_iv"}}};
  CHECK_THROWS_AS(parse_plan(bad), PreconditionError);
  bad = base;
  bad["extra"] = 1;
  CHECK_THROWS_AS(parse_plan(bad), ConfigError);
  const ExperimentPlan p = parse_plan(base);
  CHECK(parse_plan(plan_to_json(p)).estimators.front().name == "ht_lagp");
  CHECK_FALSE(plan_to_json(p).contains("parallelism"));
}

TEST_CASE("unavailable oracle") {
  ExperimentPlan plan = lp_plan(1, 1);
  plan.estimators.front().kind = EstimatorKind::LpIv;
  plan.scenario = fixtures::s4(100);
  plan.estimators.front().target.method = TargetMethod::MonteCarlo;
  CHECK_THROWS_AS(resolve_target(plan, plan.estimators.front(), 100), PreconditionError);
}
