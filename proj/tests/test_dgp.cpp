#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "pots/dgp.hpp"
#include "pots/numeric.hpp"

using namespace pots;

namespace {

NoisePanel zero_panel(int T) {
  NoisePanel p;
  p.eps = Eigen::VectorXd::Zero(T);
  p.u = Eigen::VectorXd::Zero(T);
  p.eta = Eigen::VectorXd::Zero(T);
  p.uniform = Eigen::VectorXd::Constant(T, 0.5);
  return p;
}

ScenarioSpec with_rho(double rho) {
  return parse_scenario(R"({"horizon": 100000, "outcome_law": "linear-ar", "coefficients": {"phi": 0.5, "beta0": 2.0},
    "treatment_mechanism": {"kind": "shock-normal"}, "rho": )" + std::to_string(rho) + R"(, "pots_valid": false})");
}

}  // namespace

TEST_CASE("draw_noise honours rho") {
  for (double rho : {0.0, 0.6}) {
    const ScenarioSpec s = with_rho(rho);
    const NoisePanel p = draw_noise(s, 42, 0);
    CHECK(p.horizon() == 100000);
    const double r = correlation(p.eps, p.eta);
    if (rho == 0.0) CHECK(std::abs(r) < 3.0 * std::pow(10.0, -2.5));
    else CHECK(std::abs(r - 0.6) < 0.01);
  }
}

TEST_CASE("identical streams give identical panels") {
  const ScenarioSpec s = fixtures::s4(500);
  const NoisePanel a = draw_noise(s, 9, 4), b = draw_noise(s, 9, 4), c = draw_noise(s, 9, 5);
  CHECK((a.eps.array() == b.eps.array()).all());
  CHECK((a.eta.array() == b.eta.array()).all());
  CHECK((a.zeta.array() == b.zeta.array()).all());
  CHECK((a.eps.array() != c.eps.array()).any());
  CHECK(draw_noise(fixtures::s1(50), 9, 4).zeta.size() == 0);
}

TEST_CASE("hand recursions") {
  const ScenarioSpec s1 = fixtures::s1(3);
  Eigen::VectorXd w(3);
  w << 1, 0, 0;
  const Eigen::VectorXd y = replay_outcome(s1, zero_panel(3), w);
  CHECK(y[0] == 2.0);
  CHECK(y[1] == 1.0);
  CHECK(y[2] == 0.5);

  const ScenarioSpec g = parse_scenario(R"({"horizon": 2, "outcome_law": "linear-general",
    "coefficients": {"lag_cutoff": 1, "beta": [1.0, 0.5], "u_process": {"kind": "iid-normal"}},
    "treatment_mechanism": {"kind": "shock-normal"}})");
  Eigen::VectorXd w2(2);
  w2 << 1, 1;
  const Eigen::VectorXd y2 = replay_outcome(g, zero_panel(2), w2);
  CHECK(y2[0] == 1.0);
  CHECK(y2[1] == 1.5);

  CHECK_THROWS_AS(replay_outcome(s1, zero_panel(3), Eigen::VectorXd::Zero(4)), PreconditionError);
  Eigen::VectorXd bad = w;
  bad[1] = std::nan("");
  CHECK_THROWS_AS(replay_outcome(s1, zero_panel(3), bad), PreconditionError);
}

TEST_CASE("replay prefixes do not anticipate future treatments") {
  const ScenarioSpec specs[] = {fixtures::s1(60), fixtures::s2(60), fixtures::s3(60), fixtures::time_varying(61),
                                parse_scenario(R"({"horizon": 60, "outcome_law": "linear-general",
    "coefficients": {"lag_cutoff": 2, "beta": [1.0, 0.5, 0.2], "u_process": {"kind": "arch1", "omega": 0.5, "alpha": 0.3}},
    "treatment_mechanism": {"kind": "shock-normal"}})")};
  SeedStream rng(5, 0, Channel::Counterfactual);
  for (const auto& s : specs) {
    const NoisePanel p = draw_noise(s, 3, 0);
    const PathBundle b = simulate(s, p);
    for (int t = 1; t <= s.horizon; t += 7) {
      Eigen::VectorXd w = b.W;
      for (int i = t; i < s.horizon; ++i) w[i] = s.discrete() ? 1.0 - w[i] : rng.normal() * 3;
      const Eigen::VectorXd y = replay_outcome(s, p, w);
      CHECK((y.head(t).array() == b.Y.head(t).array()).all());
      const Eigen::VectorXd prefix = replay_outcome(s, p, w.head(t));
      CHECK((prefix.array() == y.head(t).array()).all());
    }
  }
}

TEST_CASE("linear laws superpose") {
  for (const ScenarioSpec& s : {fixtures::s1(40), fixtures::time_varying(41)}) {
    const NoisePanel p = draw_noise(s, 11, 0);
    const PathBundle b = simulate(s, p);
    const Eigen::VectorXd base = replay_outcome(s, p, Eigen::VectorXd::Zero(s.horizon));
    const Eigen::VectorXd one = replay_outcome(s, p, b.W) - base;
    const Eigen::VectorXd scaled = replay_outcome(s, p, 2.5 * b.W) - base;
    CHECK((scaled - 2.5 * one).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::VectorXd other = Eigen::VectorXd::LinSpaced(s.horizon, -1, 1);
    const Eigen::VectorXd shifted = replay_outcome(s, p, b.W + other) - replay_outcome(s, p, other);
    CHECK((shifted - one).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("simulate mechanisms") {
  SUBCASE("shock-normal treatment is the eta channel") {
    const ScenarioSpec s = fixtures::s1(200);
    const NoisePanel p = draw_noise(s, 1, 0);
    const PathBundle b = simulate(s, p);
    CHECK((b.W.array() == p.eta.array()).all());
    CHECK((b.Y.array() == replay_outcome(s, p, b.W).array()).all());
    CHECK((b.propensity.array() > 0).all());
    CHECK_FALSE(b.discrete);
  }
  SUBCASE("bernoulli-iid mean") {
    const PathBundle b = simulate(fixtures::s3(100000), draw_noise(fixtures::s3(100000), 2, 0));
    CHECK(std::abs(mean(b.W) - 0.5) < 0.005);
    CHECK(b.discrete);
    CHECK((b.propensity.array() == 0.5).all());
  }
  SUBCASE("instrument correlation") {
    const ScenarioSpec s = fixtures::s4(100000);
    const PathBundle b = simulate(s, draw_noise(s, 3, 0));
    CHECK(std::abs(correlation(b.W, b.What) - 0.8 / std::sqrt(0.89)) < 0.01);
  }
  SUBCASE("logistic propensities are recorded for the realized treatment") {
    const ScenarioSpec s = fixtures::logistic_spec(50);
    const PathBundle b = simulate(s, draw_noise(s, 4, 0));
    for (int t = 2; t <= 50; ++t) {
      const double p1 = logistic(0.2 + 0.4 * b.Y[t - 2] - 0.6 * b.W[t - 2]);
      CHECK(b.propensity[t - 1] == doctest::Approx(b.W[t - 1] == 1.0 ? p1 : 1.0 - p1).epsilon(1e-14));
    }
  }
}

TEST_CASE("propensity values") {
  const double phi0 = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  CHECK(propensity(fixtures::s3(), 5, 0, 0, 1.0) == 0.5);
  CHECK(propensity(fixtures::s1(), 5, 0, 0, 0.0) == doctest::Approx(phi0).epsilon(1e-15));
  const ScenarioSpec pr = parse_scenario(R"({"horizon": 10, "outcome_law": "linear-ar", "coefficients": {"phi": 0.4, "beta0": 1},
    "treatment_mechanism": {"kind": "policy-rule", "theta": 0.0, "delta": 0.2}})");
  CHECK(propensity(pr, 5, 0.0, 2.0, 0.4) == doctest::Approx(phi0).epsilon(1e-15));
}

TEST_CASE("intervene_forward") {
  const ScenarioSpec s1 = fixtures::s1(30);
  const World world = make_world(s1, 42, 0);
  SeedStream cf(42, 0, Channel::Counterfactual);
  SUBCASE("contemporaneous difference is beta0") {
    for (int i = 0; i < 50; ++i) {
      const ForwardDraws d = draw_forward(1, cf);
      for (ReplayMode mode : {ReplayMode::Weighted, ReplayMode::Crf}) {
        const auto a = intervene_forward(world, 20, 1.0, 20, d, mode);
        const auto b = intervene_forward(world, 20, 0.0, 20, d, mode);
        CHECK(a.Y[0] - b.Y[0] == doctest::Approx(2.0).epsilon(1e-12));
      }
    }
  }
  SUBCASE("weighted mode keeps the factual outcome noise") {
    const ForwardDraws d = draw_forward(5, cf);
    const auto c = intervene_forward(world, 10, world.bundle.W[9], 10, d, ReplayMode::Weighted);
    CHECK(c.Y[0] == world.bundle.Y[9]);
  }
  SUBCASE("S2 one-step CRF averages to 0.8") {
    const World w2 = make_world(fixtures::s2(30), 42, 0);
    const int M = 100000;
    Eigen::VectorXd diff(M);
    for (int m = 0; m < M; ++m) {
      const ForwardDraws d = draw_forward(2, cf);
      diff[m] = intervene_forward(w2, 20, 1.0, 21, d, ReplayMode::Crf).Y[1] -
                intervene_forward(w2, 20, 0.0, 21, d, ReplayMode::Crf).Y[1];
    }
    const double se = std::sqrt(variance(diff) / M);
    CHECK(std::abs(mean(diff) - 0.8) <= std::max(3 * se, 1e-12));
  }
  SUBCASE("errors") {
    const ForwardDraws d = draw_forward(5, cf);
    CHECK_THROWS_AS(intervene_forward(world, 12, 1.0, 11, d, ReplayMode::Crf), PreconditionError);
    const World w3 = make_world(fixtures::s3(30), 42, 0);
    CHECK_THROWS_AS(intervene_forward(w3, 10, 0.5, 11, d, ReplayMode::Crf), PreconditionError);
  }
}

TEST_CASE("validate_pots") {
  const PotsReport ok = validate_pots(fixtures::s4(2000), 2000, 42);
  CHECK(ok["non_anticipation"].passed);
  CHECK(ok["shock"].passed);
  CHECK(ok["exclusion"].passed);
  CHECK(ok["innovation_independence"].passed);
  CHECK(validate_pots(fixtures::s1(), 2000, 42).all_passed());

  const PotsReport policy = validate_pots(fixtures::s2(), 20000, 42);
  CHECK_FALSE(policy["shock"].passed);
  CHECK(policy["non_anticipation"].passed);
  REQUIRE(policy["shock"].coef.size() == 3);
  CHECK(std::abs(policy["shock"].coef[1] - 0.2) < 0.03);

  const PotsReport corr = validate_pots(with_rho(0.5), 2000, 42);
  CHECK_FALSE(corr["innovation_independence"].passed);
  CHECK(corr["innovation_independence"].detail.find("contemporaneous") != std::string::npos);
}
