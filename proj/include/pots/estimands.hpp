#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pots/dgp.hpp"

namespace pots {

enum class Method { ExactEnumeration, Analytic, MonteCarlo };
std::string_view to_string(Method m);

struct EstimandValue {
  std::string label;  // tau, tau_star, crf, tau_star_bar, crf_bar, irf, beta_L, beta_U, beta_U_star, beta_IV
  double value = 0.0;
  Method method = Method::Analytic;
  long long mc_draws = 0;
  double mc_se = 0.0;
  int t = 0;  // 0 when the estimand is not tied to one period
  int p = 0;
  double w = 1.0;
  double wprime = 0.0;
};

/// Monte Carlo settings. Draw m uses SeedStream(seed, m, Counterfactual, substream);
/// `threads` only changes scheduling, never the result.
struct McOptions {
  long long draws = 10000;
  std::uint64_t seed = 42;
  int threads = 1;
};

/// Y_t on (W_{1:t-p-1}, w, continuation) minus Y_t on (W_{1:t-p-1}, w', continuation').
/// A missing continuation means the observed treatments W_{t-p+1:t}.
EstimandValue lag_p_effect(const World& world, int t, int p, double w, double wprime,
                           const std::optional<Eigen::VectorXd>& continuation = std::nullopt,
                           const std::optional<Eigen::VectorXd>& continuation_prime = std::nullopt);

/// Forward treatment draws averaged with the outcome noise fixed from the panel.
EstimandValue weighted_effect(const World& world, int t, int p, double w, double wprime, const McOptions& mc);
/// Same quantity, enumerating every binary continuation with its mechanism probability.
EstimandValue weighted_effect_exact(const World& world, int t, int p, double w, double wprime);

/// Outcome noise on [t-p, t] redrawn as well. Requires at least 100 draws.
EstimandValue crf(const World& world, int t, int p, double w, double wprime, const McOptions& mc);

/// (w - w') e1' A^p (beta0, 1)' with A = [[phi + beta0 delta, beta0 theta], [delta, theta]].
EstimandValue crf_linear_gaussian(const ScenarioSpec& spec, int p, double w, double wprime);

/// Projection-type impulse response E[Y_t | W_{t-p} = w] - E[Y_t | W_{t-p} = w'] under the
/// stationary Gaussian law of the linear-ar system (what a kernel regression of Y_t on
/// W_{t-p} recovers). Equals crf_linear_gaussian only when treatments are shocks.
EstimandValue irf_linear_gaussian(const ScenarioSpec& spec, int p, double w, double wprime);

/// Closed-form effect where one exists: linear-ar with shock or policy-rule treatments,
/// or linear-general / binary-demo with shock or iid treatments. Throws otherwise.
EstimandValue analytic_effect(const ScenarioSpec& spec, int t, int p, double w, double wprime);

enum class EffectKind { Weighted, Crf };

/// Average over t = p+1..T of the per-period estimand.
EstimandValue avg_weighted_effect(const World& world, int p, double w, double wprime, const McOptions& mc);
EstimandValue avg_weighted_effect_exact(const World& world, int p, double w, double wprime);
EstimandValue avg_crf(const World& world, int p, double w, double wprime, const McOptions& mc);

/// Expected CRF over stationary histories, each obtained by burn-in simulation.
EstimandValue irf_mc(const ScenarioSpec& spec, int p, double w, double wprime, const McOptions& mc);

struct BetaProjections {
  std::vector<EstimandValue> beta_L;  // t = p+1..T
  EstimandValue beta_U;
  EstimandValue beta_U_star;
};

/// Sample-moment projections over N independent paths; beta_U_star from the coefficients.
BetaProjections beta_projections(const ScenarioSpec& spec, int p, long long N, std::uint64_t seed);
EstimandValue beta_u_star(const ScenarioSpec& spec, int p);

/// Results of summing over all 2^T binary treatment paths with the panel's
/// potential outcomes held fixed.
struct Enumeration {
  double tau_star_bar = 0.0;  // E over paths of the average weighted effect
  double ht_mean = 0.0;       // E of the Horvitz-Thompson average
  double ht_variance = 0.0;   // Var of (HT average - average weighted effect)
  double eta_bar = 0.0;       // average expected conditional variance of the HT terms
  double error_cross = 0.0;   // sum over t != s of Cov of the HT errors
  long long paths = 0;
};

inline constexpr int kMaxEnumerationHorizon = 12;

Enumeration enumerate_exact(const ScenarioSpec& spec, const NoisePanel& panel, int p, double w, double wprime);

struct HtVarianceOracle {
  std::vector<double> eta2;  // conditional variance of each HT term at the panel's factual history
  double eta_bar = 0.0;      // expectation over paths, averaged over t
};

HtVarianceOracle ht_variance_oracle(const World& world, int p, double w, double wprime);

}  // namespace pots
