#include "pots/core.hpp"

#include <cmath>
#include <set>

#include "json_reader.hpp"

namespace pots {

using nlohmann::json;

std::string_view to_string(OutcomeLaw law) {
  switch (law) {
    case OutcomeLaw::LinearAr: return "linear-ar";
    case OutcomeLaw::LinearGeneral: return "linear-general";
    case OutcomeLaw::BinaryDemo: return "binary-demo";
  }
  return "?";
}

std::string_view to_string(UProcessKind kind) {
  switch (kind) {
    case UProcessKind::IidNormal: return "iid-normal";
    case UProcessKind::Ar1: return "ar1";
    case UProcessKind::RandomWalk: return "random-walk";
    case UProcessKind::Arch1: return "arch1";
  }
  return "?";
}

std::string_view to_string(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::ShockNormal: return "shock-normal";
    case MechanismKind::PolicyRule: return "policy-rule";
    case MechanismKind::BernoulliIid: return "bernoulli-iid";
    case MechanismKind::BernoulliLogistic: return "bernoulli-logistic";
  }
  return "?";
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// ScenarioSpec accessors
// ---------------------------------------------------------------------------

double ScenarioSpec::beta(int t, int s) const {
  if (s < 0 || s >= t) return 0.0;
  const auto& c = coefficients;
  if (outcome_law == OutcomeLaw::LinearAr) return c.beta0 * std::pow(c.phi, s);
  if (s > c.lag_cutoff) return 0.0;
  if (!c.beta_table.empty()) {
    const auto row = std::min<std::size_t>(static_cast<std::size_t>(t - 1), c.beta_table.size() - 1);
    return c.beta_table[row][static_cast<std::size_t>(s)];
  }
  if (c.beta_switch && t > c.beta_switch->at) return c.beta_switch->beta[static_cast<std::size_t>(s)];
  return c.beta[static_cast<std::size_t>(s)];
}

double ScenarioSpec::sigma_eta(int t) const {
  if (treatment.sigma_eta_switch && t > treatment.sigma_eta_switch->at)
    return treatment.sigma_eta_switch->sigma_eta;
  return treatment.sigma_eta;
}

double ScenarioSpec::alpha1(int t) const {
  if (!instrument) return 0.0;
  if (instrument->alpha1_switch && t > instrument->alpha1_switch->at)
    return instrument->alpha1_switch->alpha1;
  return instrument->alpha1;
}

bool ScenarioSpec::discrete() const noexcept {
  return treatment.kind == MechanismKind::BernoulliIid ||
         treatment.kind == MechanismKind::BernoulliLogistic;
}

bool ScenarioSpec::time_invariant() const noexcept {
  return coefficients.beta_table.empty() && !coefficients.beta_switch &&
         !treatment.sigma_eta_switch && !(instrument && instrument->alpha1_switch);
}

double ScenarioSpec::outcome_innovation_variance() const {
  if (outcome_law == OutcomeLaw::LinearAr) return coefficients.sigma_eps * coefficients.sigma_eps;
  const auto& u = coefficients.u;
  if (u.kind == UProcessKind::Arch1) return u.omega / (1.0 - u.alpha);
  return u.sigma * u.sigma;
}

ScenarioSpec ScenarioSpec::with_horizon(int T) const {
  ScenarioSpec out = *this;
  out.horizon = T;
  validate(out);
  return out;
}

// ---------------------------------------------------------------------------
// Strict JSON reading
// ---------------------------------------------------------------------------

namespace {

using detail::ObjectReader;

UProcessKind parse_u_kind(const std::string& s, const std::string& path) {
  if (s == "iid-normal") return UProcessKind::IidNormal;
  if (s == "ar1") return UProcessKind::Ar1;
  if (s == "random-walk") return UProcessKind::RandomWalk;
  if (s == "arch1") return UProcessKind::Arch1;
  throw ConfigError(path, "unknown U-process kind '" + s + "'");
}

MechanismKind parse_mechanism(const std::string& s, const std::string& path) {
  if (s == "shock-normal") return MechanismKind::ShockNormal;
  if (s == "policy-rule") return MechanismKind::PolicyRule;
  if (s == "bernoulli-iid") return MechanismKind::BernoulliIid;
  if (s == "bernoulli-logistic") return MechanismKind::BernoulliLogistic;
  throw ConfigError(path, "unknown mechanism '" + s + "'");
}

OutcomeLaw parse_law(const std::string& s, const std::string& path) {
  if (s == "linear-ar") return OutcomeLaw::LinearAr;
  if (s == "linear-general") return OutcomeLaw::LinearGeneral;
  if (s == "binary-demo") return OutcomeLaw::BinaryDemo;
  throw ConfigError(path, "unknown outcome law '" + s + "'");
}

Coefficients read_coefficients(ObjectReader r, OutcomeLaw law) {
  Coefficients c;
  switch (law) {
    case OutcomeLaw::LinearAr:
      c.mu = r.number_or("mu", 0.0);
      c.phi = r.number("phi");
      c.beta0 = r.number("beta0");
      c.sigma_eps = r.number_or("sigma_eps", 1.0);
      break;
    case OutcomeLaw::BinaryDemo:
      c.beta = r.numbers("beta");
      c.lag_cutoff = static_cast<int>(c.beta.size()) - 1;
      c.u.kind = UProcessKind::IidNormal;
      c.u.sigma = r.number_or("sigma_u", 1.0);
      break;
    case OutcomeLaw::LinearGeneral: {
      c.lag_cutoff = static_cast<int>(r.integer("lag_cutoff"));
      if (r.has("beta_table")) {
        const json& table = r.raw("beta_table");
        if (!table.is_array()) throw ConfigError(r.path("beta_table"), "expected an array of rows");
        for (std::size_t i = 0; i < table.size(); ++i) {
          std::vector<double> row;
          if (!table[i].is_array())
            throw ConfigError(r.path("beta_table") + "[" + std::to_string(i) + "]", "expected an array");
          for (const auto& x : table[i]) {
            if (!x.is_number())
              throw ConfigError(r.path("beta_table") + "[" + std::to_string(i) + "]", "expected numbers");
            row.push_back(x.get<double>());
          }
          c.beta_table.push_back(std::move(row));
        }
        r.mark("beta");
        if (r.has("beta")) throw ConfigError(r.path("beta"), "give either beta or beta_table, not both");
      } else {
        c.beta = r.numbers("beta");
      }
      if (r.has("beta_switch")) {
        ObjectReader s = r.child("beta_switch");
        BetaSwitch sw;
        sw.at = static_cast<int>(s.integer("at"));
        sw.beta = s.numbers("beta");
        s.finish();
        c.beta_switch = std::move(sw);
      } else {
        r.mark("beta_switch");
      }
      ObjectReader u = r.child("u_process");
      c.u.kind = parse_u_kind(u.string("kind"), u.path("kind"));
      switch (c.u.kind) {
        case UProcessKind::IidNormal:
        case UProcessKind::RandomWalk:
          c.u.sigma = u.number_or("sigma", 1.0);
          break;
        case UProcessKind::Ar1:
          c.u.phi = u.number("phi");
          c.u.sigma = u.number_or("sigma", 1.0);
          break;
        case UProcessKind::Arch1:
          c.u.omega = u.number("omega");
          c.u.alpha = u.number("alpha");
          break;
      }
      u.finish();
      break;
    }
  }
  r.finish();
  return c;
}

TreatmentMechanism read_mechanism(ObjectReader r) {
  TreatmentMechanism m;
  m.kind = parse_mechanism(r.string("kind"), r.path("kind"));
  switch (m.kind) {
    case MechanismKind::ShockNormal:
      m.sigma_eta = r.number_or("sigma_eta", 1.0);
      if (r.has("sigma_eta_switch")) {
        ObjectReader s = r.child("sigma_eta_switch");
        m.sigma_eta_switch = SigmaEtaSwitch{static_cast<int>(s.integer("at")), s.number("sigma_eta")};
        s.finish();
      } else {
        r.mark("sigma_eta_switch");
      }
      break;
    case MechanismKind::PolicyRule:
      m.gamma = r.number_or("gamma", 0.0);
      m.theta = r.number("theta");
      m.delta = r.number("delta");
      m.sigma_eta = r.number_or("sigma_eta", 1.0);
      break;
    case MechanismKind::BernoulliIid:
      m.pi = r.number("pi");
      break;
    case MechanismKind::BernoulliLogistic:
      m.a = r.number("a");
      m.b = r.number_or("b", 0.0);
      m.c = r.number_or("c", 0.0);
      break;
  }
  r.finish();
  return m;
}

InstrumentBlock read_instrument(ObjectReader r) {
  InstrumentBlock ib;
  ib.alpha0 = r.number_or("alpha0", 0.0);
  ib.alpha1 = r.number("alpha1");
  ib.sigma_zeta = r.number("sigma_zeta");
  ib.lambda = r.number_or("lambda", 0.0);
  if (r.has("alpha1_switch")) {
    ObjectReader s = r.child("alpha1_switch");
    ib.alpha1_switch = Alpha1Switch{static_cast<int>(s.integer("at")), s.number("alpha1")};
    s.finish();
  } else {
    r.mark("alpha1_switch");
  }
  r.finish();
  return ib;
}

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

}  // namespace

ScenarioSpec scenario_from_json(const json& doc) {
  ObjectReader r(doc, "");
  ScenarioSpec spec;
  spec.horizon = static_cast<int>(r.integer("horizon"));
  spec.burn_in = static_cast<int>(r.integer_or("burn_in", 500));
  spec.outcome_law = parse_law(r.string("outcome_law"), "outcome_law");
  spec.coefficients = read_coefficients(r.child("coefficients"), spec.outcome_law);
  spec.treatment = read_mechanism(r.child("treatment_mechanism"));
  if (r.has("instrument_block")) {
    spec.instrument = read_instrument(r.child("instrument_block"));
  } else {
    r.mark("instrument_block");
  }
  spec.rho = r.number_or("rho", 0.0);
  spec.pots_valid = r.boolean_or("pots_valid", true);
  r.finish();
  validate(spec);
  return spec;
}

ScenarioSpec parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("not valid JSON: ") + e.what());
  }
  return scenario_from_json(doc);
}

void validate(const ScenarioSpec& spec) {
  require(spec.horizon >= 2, "horizon", "must be at least 2");
  require(spec.burn_in >= 0, "burn_in", "must be nonnegative");
  require(spec.rho > -1.0 && spec.rho < 1.0, "rho", "must lie in (-1, 1)");

  const auto& c = spec.coefficients;
  switch (spec.outcome_law) {
    case OutcomeLaw::LinearAr:
      require(c.sigma_eps > 0, "coefficients.sigma_eps", "must be positive");
      break;
    case OutcomeLaw::BinaryDemo:
      require(!c.beta.empty(), "coefficients.beta", "needs at least one coefficient");
      require(c.u.sigma >= 0, "coefficients.sigma_u", "must be nonnegative");
      require(spec.discrete(), "treatment_mechanism.kind", "binary-demo requires a bernoulli mechanism");
      break;
    case OutcomeLaw::LinearGeneral: {
      require(c.lag_cutoff >= 0, "coefficients.lag_cutoff", "must be nonnegative");
      const auto width = static_cast<std::size_t>(c.lag_cutoff) + 1;
      if (c.beta_table.empty()) {
        require(c.beta.size() == width, "coefficients.beta", "must hold lag_cutoff + 1 coefficients");
      } else {
        require(c.beta_table.size() >= static_cast<std::size_t>(spec.horizon), "coefficients.beta_table",
                "needs one row per period");
        for (std::size_t i = 0; i < c.beta_table.size(); ++i)
          require(c.beta_table[i].size() == width, "coefficients.beta_table[" + std::to_string(i) + "]",
                  "must hold lag_cutoff + 1 coefficients");
      }
      if (c.beta_switch)
        require(c.beta_switch->beta.size() == width, "coefficients.beta_switch.beta",
                "must hold lag_cutoff + 1 coefficients");
      switch (c.u.kind) {
        case UProcessKind::IidNormal:
        case UProcessKind::RandomWalk:
          require(c.u.sigma > 0, "coefficients.u_process.sigma", "must be positive");
          break;
        case UProcessKind::Ar1:
          require(c.u.sigma > 0, "coefficients.u_process.sigma", "must be positive");
          require(std::abs(c.u.phi) < 1, "coefficients.u_process.phi", "must lie in (-1, 1); use random-walk");
          break;
        case UProcessKind::Arch1:
          require(c.u.omega > 0, "coefficients.u_process.omega", "must be positive");
          require(c.u.alpha >= 0 && c.u.alpha < 1, "coefficients.u_process.alpha", "must lie in [0, 1)");
          break;
      }
      break;
    }
  }

  const auto& m = spec.treatment;
  switch (m.kind) {
    case MechanismKind::ShockNormal:
      require(m.sigma_eta > 0, "treatment_mechanism.sigma_eta", "must be positive");
      if (m.sigma_eta_switch)
        require(m.sigma_eta_switch->sigma_eta > 0, "treatment_mechanism.sigma_eta_switch.sigma_eta",
                "must be positive");
      break;
    case MechanismKind::PolicyRule:
      require(m.sigma_eta > 0, "treatment_mechanism.sigma_eta", "must be positive");
      break;
    case MechanismKind::BernoulliIid:
      require(m.pi > 0 && m.pi < 1, "treatment_mechanism.pi", "must lie in (0, 1)");
      break;
    case MechanismKind::BernoulliLogistic:
      break;
  }

  if (spec.instrument) {
    require(spec.instrument->sigma_zeta > 0, "instrument_block.sigma_zeta", "must be positive");
    require(!spec.discrete(), "instrument_block", "instruments are supported for continuous treatments only");
  }

  if (spec.pots_valid && spec.rho != 0.0 && !spec.discrete()) {
    throw ConfigError("rho",
                      "nonzero correlation between the treatment innovation and the current outcome "
                      "innovation makes assignment depend on the outcome; conflicts with pots_valid=true");
  }
}

json to_json(const ScenarioSpec& spec) {
  json doc;
  doc["horizon"] = spec.horizon;
  doc["burn_in"] = spec.burn_in;
  doc["outcome_law"] = std::string(to_string(spec.outcome_law));

  const auto& c = spec.coefficients;
  json coef = json::object();
  switch (spec.outcome_law) {
    case OutcomeLaw::LinearAr:
      coef = {{"mu", c.mu}, {"phi", c.phi}, {"beta0", c.beta0}, {"sigma_eps", c.sigma_eps}};
      break;
    case OutcomeLaw::BinaryDemo:
      coef = {{"beta", c.beta}, {"sigma_u", c.u.sigma}};
      break;
    case OutcomeLaw::LinearGeneral: {
      coef["lag_cutoff"] = c.lag_cutoff;
      if (c.beta_table.empty())
        coef["beta"] = c.beta;
      else
        coef["beta_table"] = c.beta_table;
      if (c.beta_switch) coef["beta_switch"] = {{"at", c.beta_switch->at}, {"beta", c.beta_switch->beta}};
      json u = {{"kind", std::string(to_string(c.u.kind))}};
      switch (c.u.kind) {
        case UProcessKind::IidNormal:
        case UProcessKind::RandomWalk: u["sigma"] = c.u.sigma; break;
        case UProcessKind::Ar1: u["phi"] = c.u.phi; u["sigma"] = c.u.sigma; break;
        case UProcessKind::Arch1: u["omega"] = c.u.omega; u["alpha"] = c.u.alpha; break;
      }
      coef["u_process"] = u;
      break;
    }
  }
  doc["coefficients"] = coef;

  const auto& m = spec.treatment;
  json mech = {{"kind", std::string(to_string(m.kind))}};
  switch (m.kind) {
    case MechanismKind::ShockNormal:
      mech["sigma_eta"] = m.sigma_eta;
      if (m.sigma_eta_switch)
        mech["sigma_eta_switch"] = {{"at", m.sigma_eta_switch->at}, {"sigma_eta", m.sigma_eta_switch->sigma_eta}};
      break;
    case MechanismKind::PolicyRule:
      mech["gamma"] = m.gamma;
      mech["theta"] = m.theta;
      mech["delta"] = m.delta;
      mech["sigma_eta"] = m.sigma_eta;
      break;
    case MechanismKind::BernoulliIid: mech["pi"] = m.pi; break;
    case MechanismKind::BernoulliLogistic:
      mech["a"] = m.a;
      mech["b"] = m.b;
      mech["c"] = m.c;
      break;
  }
  doc["treatment_mechanism"] = mech;

  if (spec.instrument) {
    const auto& ib = *spec.instrument;
    json inst = {{"alpha0", ib.alpha0}, {"alpha1", ib.alpha1}, {"sigma_zeta", ib.sigma_zeta}, {"lambda", ib.lambda}};
    if (ib.alpha1_switch) inst["alpha1_switch"] = {{"at", ib.alpha1_switch->at}, {"alpha1", ib.alpha1_switch->alpha1}};
    doc["instrument_block"] = inst;
  } else {
    doc["instrument_block"] = nullptr;
  }
  doc["rho"] = spec.rho;
  doc["pots_valid"] = spec.pots_valid;
  return doc;
}

std::string serialize_scenario(const ScenarioSpec& spec) { return to_json(spec).dump(2); }

std::uint64_t spec_hash(const ScenarioSpec& spec) {
  const std::string canonical = to_json(spec).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace pots
