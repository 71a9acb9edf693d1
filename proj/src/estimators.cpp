#include "pots/estimators.hpp"

#include <cmath>
#include <limits>

#include "pots/numeric.hpp"

namespace pots {

namespace {

void finish(EstimateReport& r) {
  r.std_error = std::max(r.std_error, 0.0);
  r.ci_low = r.point - z975 * r.std_error;
  r.ci_high = r.point + z975 * r.std_error;
}

void check_lag(const PathBundle& b, int p) {
  if (p < 0) throw PreconditionError("lag p must be nonnegative");
  if (p >= b.T()) throw PreconditionError("lag p must be smaller than the sample length");
}

double term_se(const Eigen::VectorXd& terms) {
  if (terms.size() < 2) return 0.0;
  return std::sqrt(variance(terms) / static_cast<double>(terms.size()));
}

}  // namespace

EstimateReport ht_lagp(const PathBundle& b, int p, double w, double wprime) {
  if (!b.discrete) throw PreconditionError("ht_lagp needs a discrete treatment");
  check_lag(b, p);
  const int n = b.T() - p;
  Eigen::VectorXd terms(n);
  double min_prop = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double x = b.W[i];
    const double pr = b.propensity[i];
    if (!(pr >= kPropensityFloor))
      throw PreconditionError("propensity " + std::to_string(pr) + " at t=" + std::to_string(i + 1) +
                              " is below the floor 1e-6; inverse weighting needs positive treatment probabilities");
    min_prop = std::min(min_prop, pr);
    const double ind = (x == w ? 1.0 : 0.0) - (x == wprime ? 1.0 : 0.0);
    terms[i] = b.Y[i + p] * ind / pr;
  }
  EstimateReport r;
  r.estimator = "ht_lagp";
  r.p = p;
  r.point = mean(terms);
  r.std_error = term_se(terms);
  r.diagnostics = {{"n_terms", n}, {"floor_trips", 0}, {"min_propensity", min_prop}};
  finish(r);
  return r;
}

Eigen::VectorXd kernel_terms(const PathBundle& b, int p, double w, const KernelSpec& kernel) {
  check_lag(b, p);
  const int n = b.T() - p;
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) {
    const double f = b.propensity[i];
    g[i] = f < kDensityFloor ? std::numeric_limits<double>::quiet_NaN() : b.Y[i + p] * kernel.kh(b.W[i] - w) / f;
  }
  return g;
}

EstimateReport kernel_lagp(const PathBundle& b, int p, double w, double wprime, const KernelSpec& kernel) {
  if (b.discrete) throw PreconditionError("kernel_lagp needs a continuous treatment");
  check_lag(b, p);
  const int n = b.T() - p;
  std::vector<double> kept;
  kept.reserve(static_cast<std::size_t>(n));
  int trips = 0;
  for (int i = 0; i < n; ++i) {
    const double f = b.propensity[i];
    if (!(f >= kDensityFloor)) {
      ++trips;
      continue;
    }
    const double x = b.W[i];
    kept.push_back(b.Y[i + p] * (kernel.kh(x - w) - kernel.kh(x - wprime)) / f);
  }
  if (kept.empty()) throw NumericalError("every kernel term fell below the density floor 1e-8");
  const Eigen::Map<const Eigen::VectorXd> terms(kept.data(), static_cast<Eigen::Index>(kept.size()));
  EstimateReport r;
  r.estimator = "kernel_lagp";
  r.p = p;
  r.point = mean(terms);
  r.std_error = term_se(terms);
  r.diagnostics = {{"bandwidth", kernel.h},
                   {"n_terms", static_cast<double>(kept.size())},
                   {"floor_trips", trips},
                   {"oracle_density", 1}};
  finish(r);
  return r;
}

double bandwidth_rule(int T, int p, double c) {
  if (T <= p) throw PreconditionError("bandwidth rule needs T > p");
  if (!(c > 0.0)) throw ConfigError("bandwidth_c", "must be positive");
  return c * std::pow(static_cast<double>(T - p), -0.2);
}

double default_bandwidth_constant(const PathBundle& b) { return 1.06 * std::sqrt(variance(b.W)); }

double kernel_bias_term(const KernelSpec& kernel, double g2_w, double g2_wprime) {
  return 0.5 * kernel.h * kernel.h * kernel.kappa2 * (g2_w - g2_wprime);
}

EstimateReport kernel_irf(const PathBundle& b, int p, double w, double wprime, const KernelSpec& kernel) {
  if (b.discrete) throw PreconditionError("kernel_irf needs a continuous treatment");
  check_lag(b, p);
  const int n = b.T() - p;
  const Eigen::VectorXd x = b.W.head(n);
  const Eigen::VectorXd y = b.Y.tail(n);
  // centring at one observation keeps a constant outcome exactly constant
  const double y_ref = y[0];
  const Eigen::VectorXd yc = y.array() - y_ref;

  struct Fit {
    Eigen::VectorXd k;
    double mass = 0, m = 0;
  };
  auto fit = [&](double at) {
    Fit f;
    f.k = x.unaryExpr([&](double v) { return kernel.k((v - at) / kernel.h); });
    f.mass = pairwise_sum(f.k);
    if (f.mass < 5.0)
      throw PreconditionError("kernel mass " + std::to_string(f.mass) + " near w=" + std::to_string(at) +
                              " is too small for a regression estimate");
    f.m = pairwise_sum(f.k.cwiseProduct(yc)) / f.mass;
    return f;
  };
  const Fit a = fit(w);
  const Fit c = fit(wprime);
  const Eigen::VectorXd psi = (a.k.array() * (yc.array() - a.m) / a.mass - c.k.array() * (yc.array() - c.m) / c.mass).matrix();

  EstimateReport r;
  r.estimator = "kernel_irf";
  r.p = p;
  r.point = a.m - c.m;
  r.std_error = std::sqrt(psi.squaredNorm());
  r.diagnostics = {{"bandwidth", kernel.h}, {"kernel_mass_w", a.mass}, {"kernel_mass_wprime", c.mass},
                   {"n_terms", n}, {"oracle_density", 0}};
  finish(r);
  return r;
}

EstimateReport lp_ols(const PathBundle& b, int p, bool demean, Regressor regressor) {
  check_lag(b, p);
  if (regressor == Regressor::Instrument && !b.has_instrument())
    throw PreconditionError("missing instrument: the bundle has no What column");
  const int n = b.T() - p;
  Eigen::VectorXd x = (regressor == Regressor::Instrument ? b.What : b.W).head(n);
  Eigen::VectorXd y = b.Y.tail(n);
  if (demean) {
    x.array() -= mean(x);
    y.array() -= mean(y);
  }
  const double den = x.squaredNorm();
  if (!(den > 0.0)) throw NumericalError("zero denominator: sum of squared regressors is 0");
  EstimateReport r;
  r.estimator = regressor == Regressor::Instrument ? "lp_ols_what" : "lp_ols";
  r.p = p;
  r.point = x.dot(y) / den;
  const Eigen::VectorXd s = x.cwiseProduct(y - r.point * x);
  r.std_error = std::sqrt(newey_west_sum(s, p)) / den;
  r.diagnostics = {{"n_terms", n}, {"denominator", den}, {"nw_lag", p}, {"demeaned", demean ? 1 : 0}};
  finish(r);
  return r;
}

EstimateReport lp_iv(const PathBundle& b, int p) {
  check_lag(b, p);
  if (!b.has_instrument()) throw PreconditionError("missing instrument: lp_iv needs the What column");
  const int n = b.T() - p;
  const Eigen::VectorXd z = b.What.head(n);
  const Eigen::VectorXd a = b.Y.tail(n).cwiseProduct(z);
  const Eigen::VectorXd d = b.Y.head(n).cwiseProduct(z);
  const double N = pairwise_sum(a);
  const double D = pairwise_sum(d);
  const double scale = pairwise_sum(d.cwiseAbs());
  const double rel = scale > 0 ? std::abs(D) / scale : 0.0;
  if (!(rel >= kIvRelativeFloor))
    throw NumericalError("weak denominator: |sum Y_{t-p} What_{t-p}| = " + std::to_string(std::abs(D)) +
                         " (relative " + std::to_string(rel) + ")");
  EstimateReport r;
  r.estimator = "lp_iv";
  r.p = p;
  r.point = N / D;
  const Eigen::VectorXd psi = a - r.point * d;
  r.std_error = std::sqrt(newey_west_sum(psi, p)) / std::abs(D);
  r.diagnostics = {{"n_terms", n}, {"denominator", D}, {"denominator_relative", rel}, {"nw_lag", p}};
  finish(r);
  return r;
}

IvPlim lp_iv_plim_oracle(const ScenarioSpec& spec, int p) {
  if (!spec.instrument) throw PreconditionError("missing instrument: the scenario has no instrument block");
  if (!spec.shocked()) throw PreconditionError("the LP-IV limit needs shock treatments");
  if (spec.outcome_law == OutcomeLaw::BinaryDemo) throw PreconditionError("the LP-IV limit needs a linear outcome law");
  if (spec.rho != 0.0) throw PreconditionError("the LP-IV limit assumes uncorrelated innovations");
  const int T = spec.horizon;
  if (p < 0 || p >= T) throw PreconditionError("lag p must lie in [0, T)");
  const auto& ib = *spec.instrument;
  const auto& c = spec.coefficients;

  // E(U_t innov_{t-k}) and E(U_t) in the stationary regime
  double mean_u = 0.0;
  auto u_cov = [&](int k) {
    if (spec.outcome_law == OutcomeLaw::LinearAr) return std::pow(c.phi, k) * c.sigma_eps * c.sigma_eps;
    const auto& u = c.u;
    switch (u.kind) {
      case UProcessKind::IidNormal: return k == 0 ? u.sigma * u.sigma : 0.0;
      case UProcessKind::Ar1: return std::pow(u.phi, k) * u.sigma * u.sigma;
      case UProcessKind::RandomWalk: return u.sigma * u.sigma;
      case UProcessKind::Arch1: return k == 0 ? u.omega / (1.0 - u.alpha) : 0.0;
    }
    return 0.0;
  };
  if (spec.outcome_law == OutcomeLaw::LinearAr) {
    if (std::abs(c.phi) >= 1.0) throw NumericalError("explosive system: |phi| >= 1");
    mean_u = c.mu / (1.0 - c.phi);
  }

  std::vector<double> num, den, what2;
  double wmin = std::numeric_limits<double>::infinity(), wmax = -wmin;
  for (int t = p + 1; t <= T; ++t) {
    const int s = t - p;
    const double weight = spec.alpha1(s) * spec.sigma_eta(s) * spec.sigma_eta(s);  // E(W_s What_s)
    wmin = std::min(wmin, weight);
    wmax = std::max(wmax, weight);
    num.push_back(spec.beta(t, p) * weight);
    den.push_back(spec.beta(s, 0) * weight);
    what2.push_back(ib.alpha0 * ib.alpha0 + spec.alpha1(s) * spec.alpha1(s) * spec.sigma_eta(s) * spec.sigma_eta(s) +
                    ib.sigma_zeta * ib.sigma_zeta + ib.lambda * ib.lambda * spec.outcome_innovation_variance());
  }
  const double n = static_cast<double>(num.size());
  IvPlim out;
  out.beta_gamma_p = pairwise_sum(num) / n;
  out.beta_gamma_0 = pairwise_sum(den) / n;
  out.beta_prime_p = ib.alpha0 * mean_u + ib.lambda * u_cov(p);
  out.beta_prime_0 = ib.alpha0 * mean_u + ib.lambda * u_cov(0);
  if (out.beta_gamma_0 == 0.0) throw NumericalError("beta^gamma_0 is zero: the ratio is undefined");
  out.ratio = (out.beta_gamma_p + out.beta_prime_p) / out.beta_gamma_0;
  const double full_den = out.beta_gamma_0 + out.beta_prime_0;
  out.estimator_limit = full_den != 0.0 ? (out.beta_gamma_p + out.beta_prime_p) / full_den
                                        : std::numeric_limits<double>::quiet_NaN();
  out.ols_on_instrument = (out.beta_gamma_p + out.beta_prime_p) / (pairwise_sum(what2) / n);
  out.mixed_sign_weights = wmin < 0.0 && wmax > 0.0;
  if (out.mixed_sign_weights)
    out.warning =
        "instrument weights E(W_t What_t) change sign over the sample; the ratio is not a weighted average of "
        "effects (monotonicity fails)";
  return out;
}

}  // namespace pots
