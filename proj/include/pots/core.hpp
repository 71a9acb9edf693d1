#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pots {

// ---------------------------------------------------------------------------
// Errors. Each category maps onto one CLI exit code.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  Error(const std::string& what, int exit_code)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

/// Malformed or out-of-range configuration. `field()` is the dotted path.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message, 2), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// An operation was asked for something its inputs cannot support.
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error(what, 3) {}
};

/// Explosive systems, vanishing denominators and similar numerical failures.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(what, 4) {}
};

// ---------------------------------------------------------------------------
// Scenario description
// ---------------------------------------------------------------------------

enum class OutcomeLaw { LinearAr, LinearGeneral, BinaryDemo };
enum class UProcessKind { IidNormal, Ar1, RandomWalk, Arch1 };
enum class MechanismKind { ShockNormal, PolicyRule, BernoulliIid, BernoulliLogistic };

std::string_view to_string(OutcomeLaw law);
std::string_view to_string(UProcessKind kind);
std::string_view to_string(MechanismKind kind);

/// Non-treatment part of a linear potential outcome. Innovations are
/// standard normals scaled by `sigma` (or by the ARCH conditional sd).
struct UProcess {
  UProcessKind kind = UProcessKind::IidNormal;
  double sigma = 1.0;  // iid-normal, ar1, random-walk
  double phi = 0.0;    // ar1
  double omega = 1.0;  // arch1
  double alpha = 0.0;  // arch1
};

/// From period `at + 1` on, the lag coefficients become `beta`.
struct BetaSwitch {
  int at = 0;
  std::vector<double> beta;
};

struct Coefficients {
  // linear-ar: Y_t = mu + phi * Y_{t-1} + beta0 * w_t + eps_t
  double mu = 0.0;
  double phi = 0.0;
  double beta0 = 0.0;
  double sigma_eps = 1.0;

  // linear-general / binary-demo: Y_t = U_t + sum_{s<=L} beta_{t,s} w_{t-s}
  int lag_cutoff = 0;
  std::vector<double> beta;
  std::vector<std::vector<double>> beta_table;  // row t-1 holds beta_{t,.}
  std::optional<BetaSwitch> beta_switch;
  UProcess u;
};

struct SigmaEtaSwitch {
  int at = 0;
  double sigma_eta = 1.0;
};

struct TreatmentMechanism {
  MechanismKind kind = MechanismKind::ShockNormal;
  // shock-normal, policy-rule
  double sigma_eta = 1.0;
  std::optional<SigmaEtaSwitch> sigma_eta_switch;  // shock-normal only
  // policy-rule: W_t = gamma + theta W_{t-1} + delta Y_{t-1} + eta_t
  double gamma = 0.0;
  double theta = 0.0;
  double delta = 0.0;
  // bernoulli-iid
  double pi = 0.5;
  // bernoulli-logistic: P(W_t = 1) = logistic(a + b Y_{t-1} + c W_{t-1})
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

struct Alpha1Switch {
  int at = 0;
  double alpha1 = 1.0;
};

/// What_t = alpha0 + alpha1_t W_t + zeta_t + lambda * (outcome innovation at t).
struct InstrumentBlock {
  double alpha0 = 0.0;
  double alpha1 = 1.0;
  double sigma_zeta = 1.0;
  double lambda = 0.0;
  std::optional<Alpha1Switch> alpha1_switch;
};

/// Complete data-generating process. Immutable once validated.
struct ScenarioSpec {
  int horizon = 0;
  int burn_in = 500;
  OutcomeLaw outcome_law = OutcomeLaw::LinearAr;
  Coefficients coefficients;
  TreatmentMechanism treatment;
  std::optional<InstrumentBlock> instrument;
  double rho = 0.0;
  bool pots_valid = true;

  /// beta_{t,s}: effect on Y_t of the treatment at t-s (t is 1-based).
  double beta(int t, int s) const;
  double sigma_eta(int t) const;
  double alpha1(int t) const;

  bool discrete() const noexcept;
  bool shocked() const noexcept { return treatment.kind == MechanismKind::ShockNormal; }
  bool time_invariant() const noexcept;

  /// Variance of the outcome-side innovation that feeds the instrument
  /// contamination (sigma_eps^2 for linear-ar, the U innovation otherwise).
  double outcome_innovation_variance() const;

  ScenarioSpec with_horizon(int T) const;
};

ScenarioSpec parse_scenario(std::string_view text);
ScenarioSpec scenario_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ScenarioSpec& spec);
std::string serialize_scenario(const ScenarioSpec& spec);

/// Throws ConfigError naming the offending field.
void validate(const ScenarioSpec& spec);

/// FNV-1a over the canonical serialization.
std::uint64_t spec_hash(const ScenarioSpec& spec);

double logistic(double x);

}  // namespace pots
