#pragma once

#include <string>

#include "pots/core.hpp"

namespace fixtures {

inline pots::ScenarioSpec s1(int T = 400) {
  return pots::parse_scenario(R"({"horizon": )" + std::to_string(T) + R"(, "outcome_law": "linear-ar",
    "coefficients": {"phi": 0.5, "beta0": 2.0},
    "treatment_mechanism": {"kind": "shock-normal", "sigma_eta": 1.0}})");
}

inline pots::ScenarioSpec s2(int T = 400) {
  return pots::parse_scenario(R"({"horizon": )" + std::to_string(T) + R"(, "outcome_law": "linear-ar",
    "coefficients": {"phi": 0.4, "beta0": 1.0},
    "treatment_mechanism": {"kind": "policy-rule", "gamma": 0.0, "theta": 0.2, "delta": 0.2}})");
}

inline pots::ScenarioSpec s3(int T = 500, double sigma_u = 1.0) {
  return pots::parse_scenario(R"({"horizon": )" + std::to_string(T) + R"(, "outcome_law": "binary-demo",
    "coefficients": {"beta": [1.0, 0.5], "sigma_u": )" + std::to_string(sigma_u) + R"(},
    "treatment_mechanism": {"kind": "bernoulli-iid", "pi": 0.5}})");
}

inline pots::ScenarioSpec s4(int T = 10000, double lambda = 0.0) {
  return pots::parse_scenario(R"({"horizon": )" + std::to_string(T) + R"(, "outcome_law": "linear-ar",
    "coefficients": {"phi": 0.5, "beta0": 2.0},
    "treatment_mechanism": {"kind": "shock-normal", "sigma_eta": 1.0},
    "instrument_block": {"alpha1": 0.8, "sigma_zeta": 0.5, "lambda": )" + std::to_string(lambda) + "}}");
}

inline pots::ScenarioSpec logistic_spec(int T) {
  return pots::parse_scenario(R"({"horizon": )" + std::to_string(T) + R"(, "outcome_law": "binary-demo",
    "coefficients": {"beta": [1.0, 0.5, 0.25], "sigma_u": 1.0},
    "treatment_mechanism": {"kind": "bernoulli-logistic", "a": 0.2, "b": 0.4, "c": -0.6}})");
}

// beta_{t,1} = 0.5 then 1.5, var(W) = 1 then 4, balanced halves.
inline pots::ScenarioSpec time_varying(int T = 401) {
  const int half = (T - 1) / 2;
  return pots::parse_scenario(R"({"horizon": )" + std::to_string(T) + R"(, "outcome_law": "linear-general",
    "coefficients": {"lag_cutoff": 1, "beta": [1.0, 0.5],
      "beta_switch": {"at": )" + std::to_string(half + 1) + R"(, "beta": [1.0, 1.5]},
      "u_process": {"kind": "iid-normal", "sigma": 1.0}},
    "treatment_mechanism": {"kind": "shock-normal", "sigma_eta": 1.0,
      "sigma_eta_switch": {"at": )" + std::to_string(half) + R"(, "sigma_eta": 2.0}}})");
}

}  // namespace fixtures
