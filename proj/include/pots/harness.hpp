#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pots/estimators.hpp"

namespace pots {

enum class EstimatorKind { HtLagp, KernelLagp, KernelIrf, LpOls, LpIv };
std::string_view to_string(EstimatorKind k);

enum class TargetMethod { Analytic, Value, MonteCarlo };

struct TargetSpec {
  TargetMethod method = TargetMethod::Analytic;
  double value = 0.0;
  long long draws = 1000000;
};

struct EstimatorSetting {
  EstimatorKind kind = EstimatorKind::LpOls;
  std::string name;  // defaults to the kind
  int p = 1;
  double w = 1.0;
  double wprime = 0.0;
  KernelKind kernel = KernelKind::Gaussian;
  std::optional<double> bandwidth;    // fixed h
  std::optional<double> bandwidth_c;  // h = c (T-p)^{-1/5}; default c = 1.06 sd(W)
  bool demean = false;
  Regressor regressor = Regressor::Treatment;
  TargetSpec target;
};

struct ExperimentPlan {
  ScenarioSpec scenario;
  std::vector<int> t_grid;
  long long replications = 0;
  std::vector<EstimatorSetting> estimators;
  int parallelism = 1;
  std::uint64_t master_seed = 42;
};

/// `base_dir` resolves a scenario given by relative path.
ExperimentPlan parse_plan(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentPlan load_plan(const std::filesystem::path& file);
/// Parallelism is left out: it never changes results.
nlohmann::json plan_to_json(const ExperimentPlan& plan);

/// Grid ascending, estimators applicable to the scenario. `min_replications`
/// is 50 for plan files; the library accepts any M >= 1.
void validate_plan(const ExperimentPlan& plan, long long min_replications = 1);

struct MetricsCell {
  std::string estimator;
  int T = 0;
  int p = 0;
  double target = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  double sd = 0.0;  // divisor M, so rmse^2 = bias^2 + sd^2
  double rmse = 0.0;
  double coverage = 0.0;
  double mean_se = 0.0;
  double ks = 0.0;  // NaN when every replication had SE 0
  long long replications = 0;
  long long se_zero_excluded = 0;
  std::vector<double> estimates;  // replication order
  std::vector<double> std_errors;
};

struct MetricsTable {
  std::vector<MetricsCell> cells;
  const MetricsCell& at(const std::string& estimator, int T) const;
  std::vector<const MetricsCell*> for_estimator(const std::string& estimator) const;
};

double resolve_target(const ExperimentPlan& plan, const EstimatorSetting& setting, int T);

/// Estimate from one replication's bundle with a setting.
EstimateReport run_estimator(const EstimatorSetting& setting, const PathBundle& bundle);

MetricsTable run_replications(const ExperimentPlan& plan);

struct SlopeFit {
  double slope = 0.0;
  double se = 0.0;
  int points = 0;
};

SlopeFit rate_slope(const std::vector<double>& T, const std::vector<double>& rmse);
SlopeFit rate_slope(const MetricsTable& table, const std::string& estimator);

struct CoverageRow {
  std::string estimator;
  int T = 0;
  double coverage = 0.0;
  long long replications = 0;
};
std::vector<CoverageRow> coverage(const MetricsTable& table);

/// KS distance of standardized errors to N(0,1).
double normality_check(const std::vector<double>& standardized);

/// metrics.csv, slopes.csv and manifest.json.
void write_experiment(const std::filesystem::path& dir, const ExperimentPlan& plan, const MetricsTable& table);

}  // namespace pots
