#include "pots/dgp.hpp"

#include <cmath>
#include <sstream>

#include "pots/numeric.hpp"

namespace pots {

namespace {

struct NoiseState {
  double level = 0.0;
  double innov = 0.0;
};

NoiseState noise_step(const ScenarioSpec& spec, int t, double z, const NoiseState& prev) {
  const auto& c = spec.coefficients;
  NoiseState next;
  if (spec.outcome_law == OutcomeLaw::LinearAr) {
    next.innov = c.sigma_eps * z;
    return next;
  }
  const auto& u = c.u;
  switch (u.kind) {
    case UProcessKind::IidNormal:
      next.innov = u.sigma * z;
      next.level = next.innov;
      break;
    case UProcessKind::Ar1:
      next.innov = u.sigma * z;
      next.level = u.phi * prev.level + next.innov;
      break;
    case UProcessKind::RandomWalk:
      next.innov = u.sigma * z;
      next.level = prev.level + next.innov;
      break;
    case UProcessKind::Arch1: {
      // stationary start: h_1 is the unconditional variance
      const double h = t == 1 ? u.omega / (1.0 - u.alpha) : u.omega + u.alpha * prev.innov * prev.innov;
      next.innov = std::sqrt(h) * z;
      next.level = next.innov;
      break;
    }
  }
  return next;
}

const Eigen::VectorXd& active_z(const ScenarioSpec& spec, const NoisePanel& panel) {
  return spec.outcome_law == OutcomeLaw::LinearAr ? panel.eps : panel.u;
}

double outcome_at(const ScenarioSpec& spec, int t, const double* w, double y_prev, const NoiseState& n) {
  const auto& c = spec.coefficients;
  if (spec.outcome_law == OutcomeLaw::LinearAr) return c.mu + c.phi * y_prev + c.beta0 * w[t - 1] + n.innov;
  double y = n.level;
  const int top = std::min(t - 1, c.lag_cutoff);
  for (int j = 0; j <= top; ++j) y += spec.beta(t, j) * w[t - 1 - j];
  return y;
}

double mechanism_mean(const ScenarioSpec& spec, double w_prev, double y_prev) {
  const auto& m = spec.treatment;
  if (m.kind == MechanismKind::PolicyRule) return m.gamma + m.theta * w_prev + m.delta * y_prev;
  return 0.0;
}

double prob_one(const ScenarioSpec& spec, double w_prev, double y_prev) {
  const auto& m = spec.treatment;
  if (m.kind == MechanismKind::BernoulliIid) return m.pi;
  return logistic(m.a + m.b * y_prev + m.c * w_prev);
}

}  // namespace

double outcome_step(const ScenarioSpec& spec, int t, const double* w, double y_prev, double innov, double level) {
  return outcome_at(spec, t, w, y_prev, {level, innov});
}

NoisePanel draw_noise(const ScenarioSpec& spec, StreamSet& streams) {
  const int T = spec.horizon;
  NoisePanel p;
  p.eps.resize(T);
  p.u.resize(T);
  p.eta.resize(T);
  p.uniform.resize(T);
  for (int i = 0; i < T; ++i) p.eps[i] = streams.epsilon.normal();
  for (int i = 0; i < T; ++i) p.u[i] = streams.u.normal();
  const Eigen::VectorXd& zo = active_z(spec, p);
  const double r = spec.rho, rc = std::sqrt(1.0 - spec.rho * spec.rho);
  for (int i = 0; i < T; ++i) p.eta[i] = spec.sigma_eta(i + 1) * (r * zo[i] + rc * streams.eta.normal());
  if (spec.instrument) {
    p.zeta.resize(T);
    for (int i = 0; i < T; ++i) p.zeta[i] = streams.zeta.normal();
  }
  for (int i = 0; i < T; ++i) p.uniform[i] = streams.assignment.uniform();
  return p;
}

NoisePanel draw_noise(const ScenarioSpec& spec, std::uint64_t master_seed, std::uint64_t replication_id) {
  StreamSet s = derive_streams(master_seed, replication_id);
  return draw_noise(spec, s);
}

OutcomeNoise realize_outcome_noise(const ScenarioSpec& spec, const NoisePanel& panel) {
  const int T = panel.horizon();
  const Eigen::VectorXd& z = active_z(spec, panel);
  OutcomeNoise out;
  out.innov.resize(T);
  out.level.resize(T);
  NoiseState st;
  for (int t = 1; t <= T; ++t) {
    st = noise_step(spec, t, z[t - 1], st);
    out.innov[t - 1] = st.innov;
    out.level[t - 1] = st.level;
  }
  return out;
}

Eigen::VectorXd replay_outcome(const ScenarioSpec& spec, const NoisePanel& panel, const Eigen::VectorXd& w_path) {
  const auto t = static_cast<int>(w_path.size());
  if (t > panel.horizon())
    throw PreconditionError("treatment path of length " + std::to_string(t) + " exceeds the panel horizon " +
                            std::to_string(panel.horizon()));
  if (!w_path.allFinite()) throw PreconditionError("treatment path contains non-finite values");
  const OutcomeNoise noise = realize_outcome_noise(spec, panel);
  Eigen::VectorXd y(t);
  double y_prev = panel.y0;
  for (int s = 1; s <= t; ++s) {
    y[s - 1] = outcome_at(spec, s, w_path.data(), y_prev, {noise.level[s - 1], noise.innov[s - 1]});
    y_prev = y[s - 1];
  }
  return y;
}

double assign(const ScenarioSpec& spec, double w_prev, double y_prev, double eta, double uniform) {
  switch (spec.treatment.kind) {
    case MechanismKind::ShockNormal: return eta;
    case MechanismKind::PolicyRule: return mechanism_mean(spec, w_prev, y_prev) + eta;
    case MechanismKind::BernoulliIid:
    case MechanismKind::BernoulliLogistic: return uniform < prob_one(spec, w_prev, y_prev) ? 1.0 : 0.0;
  }
  return 0.0;
}

bool in_support(const ScenarioSpec& spec, double w) {
  if (!std::isfinite(w)) return false;
  return !spec.discrete() || w == 0.0 || w == 1.0;
}

double propensity(const ScenarioSpec& spec, int t, double w_prev, double y_prev, double w) {
  if (spec.discrete()) {
    const double p1 = prob_one(spec, w_prev, y_prev);
    if (w == 1.0) return p1;
    if (w == 0.0) return 1.0 - p1;
    return 0.0;
  }
  const double s = spec.sigma_eta(t);
  return normal_pdf((w - mechanism_mean(spec, w_prev, y_prev)) / s) / s;
}

PathBundle simulate(const ScenarioSpec& spec, const NoisePanel& panel) {
  const int T = panel.horizon();
  const OutcomeNoise noise = realize_outcome_noise(spec, panel);
  PathBundle b;
  b.discrete = spec.discrete();
  b.W.resize(T);
  b.Y.resize(T);
  b.propensity.resize(T);
  if (spec.instrument) b.What.resize(T);
  double w_prev = panel.w0, y_prev = panel.y0;
  for (int t = 1; t <= T; ++t) {
    const double w = assign(spec, w_prev, y_prev, panel.eta[t - 1], panel.uniform[t - 1]);
    b.W[t - 1] = w;
    b.propensity[t - 1] = propensity(spec, t, w_prev, y_prev, w);
    b.Y[t - 1] = outcome_at(spec, t, b.W.data(), y_prev, {noise.level[t - 1], noise.innov[t - 1]});
    if (spec.instrument) {
      const auto& ib = *spec.instrument;
      b.What[t - 1] = ib.alpha0 + spec.alpha1(t) * w + ib.sigma_zeta * panel.zeta[t - 1] + ib.lambda * noise.innov[t - 1];
    }
    w_prev = w;
    y_prev = b.Y[t - 1];
  }
  return b;
}

World make_world(const ScenarioSpec& spec, NoisePanel panel) {
  World w{spec, std::move(panel), {}, {}};
  w.noise = realize_outcome_noise(spec, w.panel);
  w.bundle = simulate(spec, w.panel);
  return w;
}

World make_world(const ScenarioSpec& spec, std::uint64_t master_seed, std::uint64_t replication_id) {
  return make_world(spec, draw_noise(spec, master_seed, replication_id));
}

ForwardDraws draw_forward(int length, SeedStream& stream) {
  ForwardDraws d;
  d.z_out.resize(length);
  d.z_eta.resize(length);
  d.uniform.resize(length);
  for (int i = 0; i < length; ++i) d.z_out[i] = stream.normal();
  for (int i = 0; i < length; ++i) d.z_eta[i] = stream.normal();
  for (int i = 0; i < length; ++i) d.uniform[i] = stream.uniform();
  return d;
}

Continuation intervene_forward(const World& world, int t0, double w, int t, const ForwardDraws& draws,
                               ReplayMode mode) {
  const ScenarioSpec& spec = world.spec;
  if (t0 < 1 || t0 > t) throw PreconditionError("intervention period must satisfy 1 <= t0 <= t");
  if (t > world.panel.horizon()) throw PreconditionError("target period beyond the panel horizon");
  if (!in_support(spec, w)) throw PreconditionError("forced treatment value outside the mechanism's support");
  const int n = t - t0 + 1;
  if (draws.z_out.size() < n || draws.z_eta.size() < n || draws.uniform.size() < n)
    throw PreconditionError("forward draws shorter than the continuation");

  Eigen::VectorXd W(t);
  W.head(t0 - 1) = world.bundle.W.head(t0 - 1);
  Continuation out;
  out.W.resize(n);
  out.Y.resize(n);

  const Eigen::VectorXd& zpanel = active_z(spec, world.panel);
  NoiseState st;
  if (t0 >= 2) st = {world.noise.level[t0 - 2], world.noise.innov[t0 - 2]};
  double w_prev = t0 >= 2 ? world.bundle.W[t0 - 2] : world.panel.w0;
  double y_prev = t0 >= 2 ? world.bundle.Y[t0 - 2] : world.panel.y0;
  const double r = spec.rho, rc = std::sqrt(1.0 - spec.rho * spec.rho);

  for (int s = t0; s <= t; ++s) {
    const int k = s - t0;
    double z_out;
    if (mode == ReplayMode::Crf) {
      z_out = draws.z_out[k];
      st = noise_step(spec, s, z_out, st);
    } else {
      z_out = zpanel[s - 1];
      st = {world.noise.level[s - 1], world.noise.innov[s - 1]};
    }
    if (k == 0) {
      W[s - 1] = w;
    } else {
      const double eta = spec.sigma_eta(s) * (r * z_out + rc * draws.z_eta[k]);
      W[s - 1] = assign(spec, w_prev, y_prev, eta, draws.uniform[k]);
    }
    const double y = outcome_at(spec, s, W.data(), y_prev, st);
    out.W[k] = W[s - 1];
    out.Y[k] = y;
    w_prev = W[s - 1];
    y_prev = y;
  }
  return out;
}

bool PotsReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

const PotsCheck& PotsReport::operator[](const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw PreconditionError("no diagnostic named '" + name + "'");
}

PotsReport validate_pots(const ScenarioSpec& spec_in, int M, std::uint64_t seed) {
  if (M < 10) throw PreconditionError("validate_pots needs a sample size of at least 10");
  const ScenarioSpec spec = spec_in.with_horizon(M);
  const World world = make_world(spec, seed, 0);
  const PathBundle& b = world.bundle;
  SeedStream extra(seed, 0, Channel::Counterfactual, 1);
  PotsReport report;

  {
    PotsCheck c{"non_anticipation", true, 0.0, "", {}};
    int mismatches = 0;
    const Eigen::VectorXd base = replay_outcome(spec, world.panel, b.W);
    if ((base.array() != b.Y.array()).any()) ++mismatches;
    for (int rep = 0; rep < 20; ++rep) {
      const int cut = 1 + static_cast<int>(extra.uniform() * (M - 1));
      Eigen::VectorXd w = b.W;
      for (int i = cut; i < M; ++i) w[i] = spec.discrete() ? 1.0 - w[i] : w[i] + extra.normal();
      const Eigen::VectorXd y = replay_outcome(spec, world.panel, w);
      if ((y.head(cut).array() != base.head(cut).array()).any()) ++mismatches;
    }
    c.statistic = mismatches;
    c.passed = mismatches == 0;
    c.detail = mismatches == 0 ? "outcome prefixes invariant to future treatment changes"
                               : "outcome prefix changed after perturbing future treatments";
    report.checks.push_back(c);
  }

  {
    PotsCheck c{"shock", true, 0.0, "", {}};
    Eigen::MatrixXd X(M - 1, 3);
    Eigen::VectorXd y(M - 1);
    for (int t = 2; t <= M; ++t) {
      X.row(t - 2) << 1.0, b.Y[t - 2], b.W[t - 2];
      y[t - 2] = b.W[t - 1];
    }
    const OlsFit fit = ols_hc0(X, y);
    double worst = 0.0;
    for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(fit.coef[j]) / std::max(fit.se[j], 1e-300));
    c.statistic = worst;
    c.passed = worst <= 3.0;
    c.coef = {fit.coef[0], fit.coef[1], fit.coef[2]};
    std::ostringstream os;
    os << "W_t on (1, Y_{t-1}, W_{t-1}): coef = (" << fit.coef[0] << ", " << fit.coef[1] << ", " << fit.coef[2]
       << "), max |t| = " << worst;
    c.detail = os.str();
    report.checks.push_back(c);
  }

  {
    PotsCheck c{"exclusion", true, 0.0, "no instrument block", {}};
    if (spec.instrument) {
      NoisePanel alt = world.panel;
      SeedStream zs(seed, 0, Channel::Zeta, 1);
      for (int i = 0; i < M; ++i) alt.zeta[i] = zs.normal();
      const PathBundle b2 = simulate(spec, alt);
      const bool y_same = (b2.Y.array() == b.Y.array()).all();
      const bool what_moved = (b2.What.array() != b.What.array()).any();
      c.passed = y_same && what_moved;
      c.statistic = (b2.Y - b.Y).cwiseAbs().maxCoeff();
      c.detail = c.passed ? "instrument perturbation leaves outcomes bitwise unchanged"
                          : "outcomes respond to the instrument innovation";
    }
    report.checks.push_back(c);
  }

  {
    PotsCheck c{"innovation_independence", true, 0.0, "", {}};
    const Eigen::VectorXd& driver = spec.discrete() ? world.panel.uniform : world.panel.eta;
    const double r = correlation(driver, world.noise.innov);
    c.statistic = r;
    c.passed = std::abs(r) <= 3.0 / std::sqrt(static_cast<double>(M));
    c.detail = c.passed ? "treatment innovation uncorrelated with the current outcome innovation"
                        : "treatment correlated with contemporaneous outcome innovation";
    report.checks.push_back(c);
  }
  return report;
}

}  // namespace pots
