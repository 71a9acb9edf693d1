#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pots/core.hpp"
#include "pots/rng.hpp"

namespace pots {

/// Primitive innovations for one world draw. Entry t-1 belongs to period t.
/// Held fixed during counterfactual replay.
struct NoisePanel {
  Eigen::VectorXd eps;      // N(0,1), outcome innovation of linear-ar
  Eigen::VectorXd u;        // N(0,1), U-process innovation
  Eigen::VectorXd eta;      // treatment innovation, scaled by sigma_eta(t) and rho-correlated
  Eigen::VectorXd zeta;     // N(0,1); empty without an instrument block
  Eigen::VectorXd uniform;  // assignment uniforms
  double y0 = 0.0;
  double w0 = 0.0;

  int horizon() const { return static_cast<int>(eps.size()); }
};

NoisePanel draw_noise(const ScenarioSpec& spec, StreamSet& streams);
NoisePanel draw_noise(const ScenarioSpec& spec, std::uint64_t master_seed, std::uint64_t replication_id);

/// Outcome-side noise realized from a panel: `innov` is the period innovation
/// (eps_t for linear-ar, the U innovation otherwise) and `level` is U_t.
struct OutcomeNoise {
  Eigen::VectorXd innov;
  Eigen::VectorXd level;
};

OutcomeNoise realize_outcome_noise(const ScenarioSpec& spec, const NoisePanel& panel);

/// Y_t given w_{1:t} (w points at w_1), Y_{t-1} and period-t outcome noise.
double outcome_step(const ScenarioSpec& spec, int t, const double* w, double y_prev, double innov, double level);

/// Y_{1:t}(w_{1:t}) against the panel's outcome noise.
Eigen::VectorXd replay_outcome(const ScenarioSpec& spec, const NoisePanel& panel, const Eigen::VectorXd& w_path);

struct PathBundle {
  Eigen::VectorXd W;
  Eigen::VectorXd Y;
  Eigen::VectorXd What;        // empty when there is no instrument
  Eigen::VectorXd propensity;  // p_t(W_t) or f_t(W_t)
  bool discrete = false;

  int T() const { return static_cast<int>(W.size()); }
  bool has_instrument() const { return What.size() > 0; }
};

PathBundle simulate(const ScenarioSpec& spec, const NoisePanel& panel);

/// A spec, its panel and the factual path drawn from it.
struct World {
  ScenarioSpec spec;
  NoisePanel panel;
  OutcomeNoise noise;
  PathBundle bundle;
};

World make_world(const ScenarioSpec& spec, NoisePanel panel);
World make_world(const ScenarioSpec& spec, std::uint64_t master_seed, std::uint64_t replication_id);

/// P(W_t = w | past) for discrete mechanisms, the Gaussian density f_t(w) otherwise.
double propensity(const ScenarioSpec& spec, int t, double w_prev, double y_prev, double w);
bool in_support(const ScenarioSpec& spec, double w);

/// One period of the assignment mechanism.
double assign(const ScenarioSpec& spec, double w_prev, double y_prev, double eta, double uniform);

/// Fresh draws for a forward continuation over periods t0..t (index s - t0).
struct ForwardDraws {
  Eigen::VectorXd z_out;
  Eigen::VectorXd z_eta;
  Eigen::VectorXd uniform;
};

ForwardDraws draw_forward(int length, SeedStream& stream);

/// Weighted: outcome noise stays fixed from the panel.
/// Crf: outcome noise on [t0, t] is redrawn from the forward draws.
enum class ReplayMode { Weighted, Crf };

struct Continuation {
  Eigen::VectorXd W;  // periods t0..t
  Eigen::VectorXd Y;
};

/// Conditioning on W_{t0} = w is done by intervention: the factual history up
/// to t0-1 is kept, W_{t0} is forced, and later treatments are drawn from the
/// mechanism with fresh innovations. With rho = 0 the innovation that pins
/// W_{t0} enters nothing else, so this reproduces the conditional law.
Continuation intervene_forward(const World& world, int t0, double w, int t, const ForwardDraws& draws,
                               ReplayMode mode);

struct PotsCheck {
  std::string name;
  bool passed = false;
  double statistic = 0.0;
  std::string detail;
  std::vector<double> coef;  // shock check: (intercept, Y_{t-1}, W_{t-1})
};

struct PotsReport {
  std::vector<PotsCheck> checks;
  bool all_passed() const;
  const PotsCheck& operator[](const std::string& name) const;
};

/// Non-anticipation, shock, exclusion and innovation-independence diagnostics
/// on a path of length M.
PotsReport validate_pots(const ScenarioSpec& spec, int M, std::uint64_t seed);

}  // namespace pots
