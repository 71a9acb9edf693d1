#pragma once

#include <map>
#include <string>
#include <vector>

#include "pots/dgp.hpp"
#include "pots/kernel.hpp"

namespace pots {

struct EstimateReport {
  std::string estimator;
  int p = 0;
  double point = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::map<std::string, double> diagnostics;
};

inline constexpr double kPropensityFloor = 1e-6;
inline constexpr double kDensityFloor = 1e-8;
inline constexpr double kIvRelativeFloor = 1e-6;

/// Horvitz-Thompson average of Y_t (1{W_{t-p}=w} - 1{W_{t-p}=w'}) / p_{t-p}(W_{t-p}).
EstimateReport ht_lagp(const PathBundle& bundle, int p, double w, double wprime);

/// Time average of Y_t [k_h(W_{t-p} - w) - k_h(W_{t-p} - w')] / f_{t-p}(W_{t-p}),
/// using the recorded densities. Terms whose density is below the floor are dropped and counted.
EstimateReport kernel_lagp(const PathBundle& bundle, int p, double w, double wprime, const KernelSpec& kernel);

/// Per-term values of the kernel estimator at one evaluation point, NaN where floored.
Eigen::VectorXd kernel_terms(const PathBundle& bundle, int p, double w, const KernelSpec& kernel);

/// h = c (T - p)^{-1/5}
double bandwidth_rule(int T, int p, double c);
/// 1.06 sd(W), the default constant.
double default_bandwidth_constant(const PathBundle& bundle);

/// 0.5 h^2 kappa2 (g''(w) - g''(w')).
double kernel_bias_term(const KernelSpec& kernel, double g2_w, double g2_wprime);

/// Nadaraya-Watson regression of Y_t on W_{t-p} at w minus at w', density from the sample.
EstimateReport kernel_irf(const PathBundle& bundle, int p, double w, double wprime, const KernelSpec& kernel);

enum class Regressor { Treatment, Instrument };

/// Sum Y_t X_{t-p} / Sum X_{t-p}^2 with Newey-West (lag p) standard error.
EstimateReport lp_ols(const PathBundle& bundle, int p, bool demean = false, Regressor regressor = Regressor::Treatment);

/// Sum Y_t What_{t-p} / Sum Y_{t-p} What_{t-p}, delta-method Newey-West standard error.
EstimateReport lp_iv(const PathBundle& bundle, int p);

struct IvPlim {
  double beta_gamma_p = 0.0;
  double beta_gamma_0 = 0.0;
  double beta_prime_p = 0.0;  // lim avg E(U_t What_{t-p})
  double beta_prime_0 = 0.0;
  double ratio = 0.0;            // (beta_gamma_p + beta_prime_p) / beta_gamma_0
  double estimator_limit = 0.0;  // (beta_gamma_p + beta_prime_p) / (beta_gamma_0 + beta_prime_0)
  double ols_on_instrument = 0.0;  // E(Y_t What_{t-p}) / E(What^2), LP-OLS with What as regressor
  bool mixed_sign_weights = false;
  std::string warning;
};

/// Closed-form probability limits for the LP-IV ratio on a linear shocked spec with an instrument block.
IvPlim lp_iv_plim_oracle(const ScenarioSpec& spec, int p);

}  // namespace pots
