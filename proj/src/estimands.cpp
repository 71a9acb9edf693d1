#include "pots/estimands.hpp"

#include <cmath>
#include <functional>

#include <Eigen/Eigenvalues>

#include "pots/numeric.hpp"
#include "pots/parallel.hpp"

namespace pots {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::ExactEnumeration: return "exact-enumeration";
    case Method::Analytic: return "analytic";
    case Method::MonteCarlo: return "monte-carlo";
  }
  return "?";
}

namespace {

EstimandValue make_value(std::string label, int t, int p, double w, double wprime) {
  EstimandValue v;
  v.label = std::move(label);
  v.t = t;
  v.p = p;
  v.w = w;
  v.wprime = wprime;
  return v;
}

void check_lag(int t, int p, int T) {
  if (p < 0) throw PreconditionError("lag p must be nonnegative");
  if (p >= t) throw PreconditionError("lag p must be smaller than t (p=" + std::to_string(p) + ", t=" + std::to_string(t) + ")");
  if (t > T) throw PreconditionError("t=" + std::to_string(t) + " exceeds the horizon " + std::to_string(T));
}

void check_support(const ScenarioSpec& spec, double w, double wprime) {
  if (!in_support(spec, w) || !in_support(spec, wprime))
    throw PreconditionError("treatment values outside the mechanism's support");
}

void require_discrete(const ScenarioSpec& spec) {
  if (!spec.discrete()) throw PreconditionError("exact requires discrete mechanism");
}

/// Mean and standard error of per-draw differences.
void fill_mc(EstimandValue& v, const std::vector<double>& diffs) {
  Eigen::Map<const Eigen::VectorXd> d(diffs.data(), static_cast<Eigen::Index>(diffs.size()));
  v.method = Method::MonteCarlo;
  v.mc_draws = static_cast<long long>(diffs.size());
  v.value = mean(d);
  v.mc_se = std::sqrt(variance(d) / static_cast<double>(diffs.size()));
}

EstimandValue mc_difference(const World& world, int t, int p, double w, double wprime, const McOptions& mc,
                            ReplayMode mode, std::string label) {
  EstimandValue v = make_value(std::move(label), t, p, w, wprime);
  std::vector<double> diffs(static_cast<std::size_t>(mc.draws));
  const int t0 = t - p;
  parallel_for(mc.draws, mc.threads, [&](long long m) {
    SeedStream s(mc.seed, static_cast<std::uint64_t>(m), Channel::Counterfactual, static_cast<std::uint64_t>(t));
    const ForwardDraws fd = draw_forward(p + 1, s);
    const double a = intervene_forward(world, t0, w, t, fd, mode).Y[p];
    const double b = intervene_forward(world, t0, wprime, t, fd, mode).Y[p];
    diffs[static_cast<std::size_t>(m)] = a - b;
  });
  fill_mc(v, diffs);
  return v;
}

struct ArmMoments {
  double propensity = 0.0;
  double e1 = 0.0;  // E[Y_t | history, W_{t0} = x]
  double e2 = 0.0;  // E[Y_t^2 | history, W_{t0} = x]
};

double checked_prob(const ScenarioSpec& spec, int s, double w_prev, double y_prev, double x) {
  const double p1 = propensity(spec, s, w_prev, y_prev, 1.0);
  if (!(p1 > 0.0 && p1 < 1.0))
    throw PreconditionError(
        "treatment assignment is deterministic at some history; inverse weighting needs propensities in (0, 1)");
  return x == 1.0 ? p1 : 1.0 - p1;
}

/// Enumerates binary continuations W_{t0+1..t} after forcing W_{t0} = x. `W`
/// holds the history in entries 0..t0-2 and is used as scratch beyond that.
ArmMoments arm_moments(const ScenarioSpec& spec, const OutcomeNoise& noise, Eigen::VectorXd& W, int t0, double x,
                       int t, double w_prev, double y_prev) {
  ArmMoments out;
  out.propensity = checked_prob(spec, t0, w_prev, y_prev, x);
  std::function<void(int, double, double)> walk = [&](int s, double prob, double yp) {
    const double y = outcome_step(spec, s, W.data(), yp, noise.innov[s - 1], noise.level[s - 1]);
    if (s == t) {
      out.e1 += prob * y;
      out.e2 += prob * y * y;
      return;
    }
    for (double nxt : {0.0, 1.0}) {
      const double q = checked_prob(spec, s + 1, W[s - 1], y, nxt);
      W[s] = nxt;
      walk(s + 1, prob * q, y);
    }
  };
  W[t0 - 1] = x;
  walk(t0, 1.0, y_prev);
  return out;
}

struct ConditionalHt {
  double tau_star = 0.0;
  double eta2 = 0.0;
};

ConditionalHt conditional_ht(const ScenarioSpec& spec, const OutcomeNoise& noise, Eigen::VectorXd W, int t, int p,
                             double w, double wprime, double w_prev, double y_prev) {
  const int t0 = t - p;
  const ArmMoments a = arm_moments(spec, noise, W, t0, w, t, w_prev, y_prev);
  if (w == wprime) return {};
  const ArmMoments b = arm_moments(spec, noise, W, t0, wprime, t, w_prev, y_prev);
  ConditionalHt c;
  c.tau_star = a.e1 - b.e1;
  c.eta2 = a.e2 / a.propensity + b.e2 / b.propensity - c.tau_star * c.tau_star;
  return c;
}

Eigen::Matrix2d companion(const ScenarioSpec& spec) {
  const auto& c = spec.coefficients;
  const auto& m = spec.treatment;
  const double delta = m.kind == MechanismKind::PolicyRule ? m.delta : 0.0;
  const double theta = m.kind == MechanismKind::PolicyRule ? m.theta : 0.0;
  Eigen::Matrix2d A;
  A << c.phi + c.beta0 * delta, c.beta0 * theta, delta, theta;
  return A;
}

double spectral_radius(const Eigen::Matrix2d& A) {
  return Eigen::EigenSolver<Eigen::Matrix2d>(A, false).eigenvalues().cwiseAbs().maxCoeff();
}

void require_linear_gaussian(const ScenarioSpec& spec) {
  if (spec.outcome_law != OutcomeLaw::LinearAr)
    throw PreconditionError("closed form needs the linear-ar outcome law");
  if (spec.treatment.kind != MechanismKind::ShockNormal && spec.treatment.kind != MechanismKind::PolicyRule)
    throw PreconditionError("closed form needs a shock-normal or policy-rule mechanism");
  if (spec.rho != 0.0) throw PreconditionError("closed form needs uncorrelated treatment and outcome innovations");
}

Eigen::Matrix2d stable_companion(const ScenarioSpec& spec) {
  const Eigen::Matrix2d A = companion(spec);
  const double r = spectral_radius(A);
  if (r >= 1.0) throw NumericalError("explosive system: companion spectral radius " + std::to_string(r) + " >= 1");
  return A;
}

EstimandValue average(std::string label, int p, double w, double wprime, const std::vector<EstimandValue>& parts) {
  EstimandValue v = make_value(std::move(label), 0, p, w, wprime);
  std::vector<double> vals, vars;
  bool any_mc = false;
  for (const auto& e : parts) {
    vals.push_back(e.value);
    vars.push_back(e.mc_se * e.mc_se);
    v.mc_draws += e.mc_draws;
    any_mc = any_mc || e.method == Method::MonteCarlo;
  }
  const double n = static_cast<double>(parts.size());
  v.value = pairwise_sum(vals) / n;
  v.mc_se = std::sqrt(pairwise_sum(vars)) / n;
  v.method = any_mc ? Method::MonteCarlo : parts.front().method;
  return v;
}

}  // namespace

EstimandValue lag_p_effect(const World& world, int t, int p, double w, double wprime,
                           const std::optional<Eigen::VectorXd>& continuation,
                           const std::optional<Eigen::VectorXd>& continuation_prime) {
  const ScenarioSpec& spec = world.spec;
  check_lag(t, p, world.panel.horizon());
  check_support(spec, w, wprime);
  for (const auto* c : {&continuation, &continuation_prime})
    if (*c && (*c)->size() != p)
      throw PreconditionError("continuation must have length p=" + std::to_string(p));
  auto path = [&](double x, const std::optional<Eigen::VectorXd>& cont) {
    Eigen::VectorXd W = world.bundle.W.head(t);
    W[t - p - 1] = x;
    if (cont) W.tail(p) = *cont;
    return replay_outcome(spec, world.panel, W)[t - 1];
  };
  EstimandValue v = make_value("tau", t, p, w, wprime);
  v.method = Method::ExactEnumeration;
  v.value = path(w, continuation) - path(wprime, continuation_prime);
  return v;
}

EstimandValue weighted_effect(const World& world, int t, int p, double w, double wprime, const McOptions& mc) {
  check_lag(t, p, world.panel.horizon());
  check_support(world.spec, w, wprime);
  if (p == 0) {
    // nothing to draw: the effect is a single replay difference
    EstimandValue v = lag_p_effect(world, t, 0, w, wprime);
    v.label = "tau_star";
    return v;
  }
  if (mc.draws < 1) throw PreconditionError("Monte Carlo needs at least one draw");
  return mc_difference(world, t, p, w, wprime, mc, ReplayMode::Weighted, "tau_star");
}

EstimandValue weighted_effect_exact(const World& world, int t, int p, double w, double wprime) {
  require_discrete(world.spec);
  check_lag(t, p, world.panel.horizon());
  check_support(world.spec, w, wprime);
  const int t0 = t - p;
  const double w_prev = t0 >= 2 ? world.bundle.W[t0 - 2] : world.panel.w0;
  const double y_prev = t0 >= 2 ? world.bundle.Y[t0 - 2] : world.panel.y0;
  Eigen::VectorXd W = world.bundle.W.head(t);
  const ArmMoments a = arm_moments(world.spec, world.noise, W, t0, w, t, w_prev, y_prev);
  const ArmMoments b = arm_moments(world.spec, world.noise, W, t0, wprime, t, w_prev, y_prev);
  EstimandValue v = make_value("tau_star", t, p, w, wprime);
  v.method = Method::ExactEnumeration;
  v.value = a.e1 - b.e1;
  return v;
}

EstimandValue crf(const World& world, int t, int p, double w, double wprime, const McOptions& mc) {
  if (mc.draws < 100) throw PreconditionError("crf needs at least 100 Monte Carlo draws");
  check_lag(t, p, world.panel.horizon());
  check_support(world.spec, w, wprime);
  return mc_difference(world, t, p, w, wprime, mc, ReplayMode::Crf, "crf");
}

EstimandValue crf_linear_gaussian(const ScenarioSpec& spec, int p, double w, double wprime) {
  require_linear_gaussian(spec);
  if (p < 0) throw PreconditionError("lag p must be nonnegative");
  const Eigen::Matrix2d A = stable_companion(spec);
  Eigen::Matrix2d Ap = Eigen::Matrix2d::Identity();
  for (int k = 0; k < p; ++k) Ap = Ap * A;
  const Eigen::Vector2d load(spec.coefficients.beta0, 1.0);
  EstimandValue v = make_value("crf", 0, p, w, wprime);
  v.value = (w - wprime) * (Ap * load)[0];
  return v;
}

EstimandValue irf_linear_gaussian(const ScenarioSpec& spec, int p, double w, double wprime) {
  require_linear_gaussian(spec);
  if (!spec.time_invariant()) throw PreconditionError("stationary law needs time-invariant parameters");
  if (p < 0) throw PreconditionError("lag p must be nonnegative");
  const Eigen::Matrix2d A = stable_companion(spec);
  // x_t = (Y_t, W_t) = c + A x_{t-1} + B (eta_t, eps_t)
  Eigen::Matrix2d B;
  B << spec.coefficients.beta0, 1.0, 1.0, 0.0;
  const Eigen::Vector2d q(spec.treatment.sigma_eta * spec.treatment.sigma_eta,
                          spec.coefficients.sigma_eps * spec.coefficients.sigma_eps);
  const Eigen::Matrix2d C = B * q.asDiagonal() * B.transpose();
  // vec(S) = (I - A kron A)^{-1} vec(C), column-major vec
  Eigen::Matrix4d K;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) K.block<2, 2>(2 * i, 2 * j) = A(i, j) * A;
  const Eigen::Vector4d vecS =
      (Eigen::Matrix4d::Identity() - K).fullPivLu().solve(Eigen::Map<const Eigen::Vector4d>(C.data()));
  const Eigen::Matrix2d S = Eigen::Map<const Eigen::Matrix2d>(vecS.data());
  Eigen::Matrix2d Ap = Eigen::Matrix2d::Identity();
  for (int k = 0; k < p; ++k) Ap = Ap * A;
  const Eigen::Matrix2d lagged = Ap * S;  // Cov(x_t, x_{t-p})
  EstimandValue v = make_value("irf", 0, p, w, wprime);
  v.value = (w - wprime) * lagged(0, 1) / S(1, 1);
  return v;
}

EstimandValue analytic_effect(const ScenarioSpec& spec, int t, int p, double w, double wprime) {
  if (p < 0) throw PreconditionError("lag p must be nonnegative");
  if (t != 0 && p >= t) throw PreconditionError("lag p must be smaller than t");
  const auto kind = spec.treatment.kind;
  if (spec.rho != 0.0) throw PreconditionError("no closed form with correlated innovations");
  if (kind == MechanismKind::ShockNormal || kind == MechanismKind::BernoulliIid) {
    // future treatments ignore the intervention, so only beta_{t,p} survives
    if (t == 0 && !spec.time_invariant())
      throw PreconditionError("a period t is needed for time-varying coefficients");
    EstimandValue v = make_value("crf", t, p, w, wprime);
    v.value = spec.beta(t == 0 ? p + 1 : t, p) * (w - wprime);
    return v;
  }
  if (kind == MechanismKind::PolicyRule && spec.outcome_law == OutcomeLaw::LinearAr) {
    EstimandValue v = crf_linear_gaussian(spec, p, w, wprime);
    v.t = t;
    return v;
  }
  throw PreconditionError("no closed form for this scenario's outcome law and mechanism");
}

EstimandValue avg_weighted_effect(const World& world, int p, double w, double wprime, const McOptions& mc) {
  const int T = world.panel.horizon();
  check_lag(T, p, T);
  std::vector<EstimandValue> parts;
  for (int t = p + 1; t <= T; ++t) parts.push_back(weighted_effect(world, t, p, w, wprime, mc));
  return average("tau_star_bar", p, w, wprime, parts);
}

EstimandValue avg_weighted_effect_exact(const World& world, int p, double w, double wprime) {
  const int T = world.panel.horizon();
  check_lag(T, p, T);
  std::vector<EstimandValue> parts;
  for (int t = p + 1; t <= T; ++t) parts.push_back(weighted_effect_exact(world, t, p, w, wprime));
  return average("tau_star_bar", p, w, wprime, parts);
}

EstimandValue avg_crf(const World& world, int p, double w, double wprime, const McOptions& mc) {
  const int T = world.panel.horizon();
  check_lag(T, p, T);
  std::vector<EstimandValue> parts;
  for (int t = p + 1; t <= T; ++t) parts.push_back(crf(world, t, p, w, wprime, mc));
  return average("crf_bar", p, w, wprime, parts);
}

EstimandValue irf_mc(const ScenarioSpec& spec, int p, double w, double wprime, const McOptions& mc) {
  if (p < 0) throw PreconditionError("lag p must be nonnegative");
  if (mc.draws < 1) throw PreconditionError("Monte Carlo needs at least one draw");
  check_support(spec, w, wprime);
  if (!spec.time_invariant()) throw PreconditionError("stationary estimands need time-invariant parameters");
  if (spec.outcome_law == OutcomeLaw::LinearAr) {
    if (spec.treatment.kind == MechanismKind::ShockNormal || spec.treatment.kind == MechanismKind::PolicyRule) {
      stable_companion(spec);
    } else if (std::abs(spec.coefficients.phi) >= 1.0) {
      throw NumericalError("explosive system: |phi| >= 1");
    }
  } else if (spec.coefficients.u.kind == UProcessKind::RandomWalk) {
    throw PreconditionError("stationary estimands are undefined for a random-walk U process");
  }
  const int t0 = spec.burn_in + 1;
  const int t = t0 + p;
  const ScenarioSpec run = spec.with_horizon(t);
  EstimandValue v = make_value("irf", 0, p, w, wprime);
  std::vector<double> diffs(static_cast<std::size_t>(mc.draws));
  parallel_for(mc.draws, mc.threads, [&](long long m) {
    const World world = make_world(run, mc.seed, static_cast<std::uint64_t>(m));
    SeedStream s(mc.seed, static_cast<std::uint64_t>(m), Channel::Counterfactual);
    const ForwardDraws fd = draw_forward(p + 1, s);
    const double a = intervene_forward(world, t0, w, t, fd, ReplayMode::Crf).Y[p];
    const double b = intervene_forward(world, t0, wprime, t, fd, ReplayMode::Crf).Y[p];
    diffs[static_cast<std::size_t>(m)] = a - b;
  });
  fill_mc(v, diffs);
  return v;
}

EstimandValue beta_u_star(const ScenarioSpec& spec, int p) {
  const int T = spec.horizon;
  if (p < 0 || p >= T) throw PreconditionError("lag p must lie in [0, T)");
  if (!spec.shocked()) throw PreconditionError("projection targets need shock treatments (zero conditional mean)");
  std::vector<double> num, den;
  for (int t = p + 1; t <= T; ++t) {
    const double s2 = spec.sigma_eta(t - p) * spec.sigma_eta(t - p);
    num.push_back(spec.beta(t, p) * s2);
    den.push_back(s2);
  }
  EstimandValue v = make_value("beta_U_star", 0, p, 1.0, 0.0);
  v.value = pairwise_sum(num) / pairwise_sum(den);
  return v;
}

BetaProjections beta_projections(const ScenarioSpec& spec, int p, long long N, std::uint64_t seed) {
  if (!spec.shocked()) throw PreconditionError("projection targets need shock treatments (zero conditional mean)");
  const int T = spec.horizon;
  if (p < 0 || p >= T) throw PreconditionError("lag p must lie in [0, T)");
  if (N < 2) throw PreconditionError("beta_projections needs at least two replications");
  const int n = T - p;
  Eigen::VectorXd sa = Eigen::VectorXd::Zero(n), sb = sa, saa = sa, sbb = sa, sab = sa;
  double A = 0, B = 0, AA = 0, BB = 0, AB = 0;
  for (long long r = 0; r < N; ++r) {
    const PathBundle b = simulate(spec, draw_noise(spec, seed, static_cast<std::uint64_t>(r)));
    const Eigen::VectorXd a = b.Y.tail(n).cwiseProduct(b.W.head(n));
    const Eigen::VectorXd d = b.W.head(n).cwiseAbs2();
    sa += a;
    sb += d;
    saa += a.cwiseAbs2();
    sbb += d.cwiseAbs2();
    sab += a.cwiseProduct(d);
    const double ta = pairwise_sum(a), tb = pairwise_sum(d);
    A += ta;
    B += tb;
    AA += ta * ta;
    BB += tb * tb;
    AB += ta * tb;
  }
  auto ratio_se = [](double a, double b, double aa, double bb, double ab) {
    const double beta = a / b;
    return std::sqrt(std::max(aa - 2.0 * beta * ab + beta * beta * bb, 0.0)) / std::abs(b);
  };
  BetaProjections out;
  for (int i = 0; i < n; ++i) {
    EstimandValue v = make_value("beta_L", p + 1 + i, p, 1.0, 0.0);
    v.method = Method::MonteCarlo;
    v.mc_draws = N;
    v.value = sa[i] / sb[i];
    v.mc_se = ratio_se(sa[i], sb[i], saa[i], sbb[i], sab[i]);
    out.beta_L.push_back(v);
  }
  out.beta_U = make_value("beta_U", 0, p, 1.0, 0.0);
  out.beta_U.method = Method::MonteCarlo;
  out.beta_U.mc_draws = N;
  out.beta_U.value = A / B;
  out.beta_U.mc_se = ratio_se(A, B, AA, BB, AB);
  out.beta_U_star = beta_u_star(spec, p);
  return out;
}

Enumeration enumerate_exact(const ScenarioSpec& spec, const NoisePanel& panel, int p, double w, double wprime) {
  require_discrete(spec);
  const int T = panel.horizon();
  if (T > kMaxEnumerationHorizon)
    throw PreconditionError("exact enumeration is limited to T <= " + std::to_string(kMaxEnumerationHorizon));
  check_lag(T, p, T);
  check_support(spec, w, wprime);
  const OutcomeNoise noise = realize_outcome_noise(spec, panel);
  const int n = T - p;

  // conditional tau* and eta^2 per (t, prefix of length t-p-1), filled on demand
  std::vector<std::vector<ConditionalHt>> table(static_cast<std::size_t>(T + 1));
  std::vector<std::vector<char>> filled(static_cast<std::size_t>(T + 1));
  for (int t = p + 1; t <= T; ++t) {
    table[t].resize(std::size_t{1} << (t - p - 1));
    filled[t].assign(table[t].size(), 0);
  }

  Enumeration out;
  std::vector<double> e_u(n, 0.0);
  Eigen::MatrixXd e_uu = Eigen::MatrixXd::Zero(n, n);
  double e_ht = 0, e_tau = 0, e_err2 = 0, e_eta = 0;

  Eigen::VectorXd W(T), Y(T), prop(T);
  for (long long mask = 0; mask < (1LL << T); ++mask) {
    double prob = 1.0;
    double w_prev = panel.w0, y_prev = panel.y0;
    for (int s = 1; s <= T; ++s) {
      W[s - 1] = static_cast<double>((mask >> (s - 1)) & 1);
      prop[s - 1] = checked_prob(spec, s, w_prev, y_prev, W[s - 1]);
      prob *= prop[s - 1];
      Y[s - 1] = outcome_step(spec, s, W.data(), y_prev, noise.innov[s - 1], noise.level[s - 1]);
      w_prev = W[s - 1];
      y_prev = Y[s - 1];
    }
    std::vector<double> u(n);
    double ht = 0, tau = 0;
    for (int t = p + 1; t <= T; ++t) {
      const int L = t - p - 1;
      const auto key = static_cast<std::size_t>(mask & ((1LL << L) - 1));
      if (!filled[t][key]) {
        const double wp = L >= 1 ? W[L - 1] : panel.w0;
        const double yp = L >= 1 ? Y[L - 1] : panel.y0;
        table[t][key] = conditional_ht(spec, noise, W, t, p, w, wprime, wp, yp);
        filled[t][key] = 1;
      }
      const ConditionalHt& c = table[t][key];
      const double x = W[t - p - 1];
      const double ind = (x == w ? 1.0 : 0.0) - (x == wprime ? 1.0 : 0.0);
      const double term = Y[t - 1] * ind / prop[t - p - 1];
      u[t - p - 1] = term - c.tau_star;
      ht += term;
      tau += c.tau_star;
      e_eta += prob * c.eta2;
    }
    ht /= n;
    tau /= n;
    e_ht += prob * ht;
    e_tau += prob * tau;
    e_err2 += prob * (ht - tau) * (ht - tau);
    for (int i = 0; i < n; ++i) {
      e_u[i] += prob * u[i];
      for (int j = 0; j < n; ++j) e_uu(i, j) += prob * u[i] * u[j];
    }
  }
  const double e_err = e_ht - e_tau;
  out.paths = 1LL << T;
  out.ht_mean = e_ht;
  out.tau_star_bar = e_tau;
  out.ht_variance = e_err2 - e_err * e_err;
  out.eta_bar = e_eta / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) out.error_cross += e_uu(i, j) - e_u[i] * e_u[j];
  return out;
}

HtVarianceOracle ht_variance_oracle(const World& world, int p, double w, double wprime) {
  const ScenarioSpec& spec = world.spec;
  require_discrete(spec);
  const int T = world.panel.horizon();
  check_lag(T, p, T);
  HtVarianceOracle out;
  for (int t = p + 1; t <= T; ++t) {
    const int t0 = t - p;
    const double wp = t0 >= 2 ? world.bundle.W[t0 - 2] : world.panel.w0;
    const double yp = t0 >= 2 ? world.bundle.Y[t0 - 2] : world.panel.y0;
    out.eta2.push_back(conditional_ht(spec, world.noise, world.bundle.W.head(t), t, p, w, wprime, wp, yp).eta2);
  }
  out.eta_bar = enumerate_exact(spec, world.panel, p, w, wprime).eta_bar;
  return out;
}

}  // namespace pots
