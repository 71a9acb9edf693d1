#include "pots/harness.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "json_reader.hpp"
#include "pots/estimands.hpp"
#include "pots/io.hpp"
#include "pots/numeric.hpp"
#include "pots/parallel.hpp"

namespace pots {

using nlohmann::json;
using detail::ObjectReader;

std::string_view to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::HtLagp: return "ht_lagp";
    case EstimatorKind::KernelLagp: return "kernel_lagp";
    case EstimatorKind::KernelIrf: return "kernel_irf";
    case EstimatorKind::LpOls: return "lp_ols";
    case EstimatorKind::LpIv: return "lp_iv";
  }
  return "?";
}

namespace {

EstimatorKind parse_estimator_kind(const std::string& s, const std::string& path) {
  for (auto k : {EstimatorKind::HtLagp, EstimatorKind::KernelLagp, EstimatorKind::KernelIrf, EstimatorKind::LpOls,
                 EstimatorKind::LpIv})
    if (s == to_string(k)) return k;
  throw ConfigError(path, "unknown estimator '" + s + "'");
}

std::string_view to_string(TargetMethod m) {
  switch (m) {
    case TargetMethod::Analytic: return "analytic";
    case TargetMethod::Value: return "value";
    case TargetMethod::MonteCarlo: return "monte-carlo";
  }
  return "?";
}

EstimatorSetting read_setting(ObjectReader r) {
  EstimatorSetting s;
  s.kind = parse_estimator_kind(r.string("kind"), r.path("kind"));
  s.name = r.string_or("name", std::string(to_string(s.kind)));
  s.p = static_cast<int>(r.integer_or("p", 1));
  s.w = r.number_or("w", 1.0);
  s.wprime = r.number_or("wprime", 0.0);
  s.kernel = KernelKind::Gaussian;
  if (r.has("kernel")) {
    try {
      s.kernel = parse_kernel(r.string("kernel"));
    } catch (const ConfigError&) {
      throw ConfigError(r.path("kernel"), "unknown kernel");
    }
  } else {
    r.mark("kernel");
  }
  if (r.has("bandwidth")) s.bandwidth = r.number("bandwidth");
  else r.mark("bandwidth");
  if (r.has("bandwidth_c")) s.bandwidth_c = r.number("bandwidth_c");
  else r.mark("bandwidth_c");
  s.demean = r.boolean_or("demean", false);
  const std::string reg = r.string_or("regressor", "treatment");
  if (reg == "treatment") s.regressor = Regressor::Treatment;
  else if (reg == "instrument") s.regressor = Regressor::Instrument;
  else throw ConfigError(r.path("regressor"), "must be 'treatment' or 'instrument'");
  if (r.has("target")) {
    ObjectReader t = r.child("target");
    const std::string m = t.string("method");
    if (m == "analytic") {
      s.target.method = TargetMethod::Analytic;
    } else if (m == "value") {
      s.target.method = TargetMethod::Value;
      s.target.value = t.number("value");
    } else if (m == "monte-carlo") {
      s.target.method = TargetMethod::MonteCarlo;
      s.target.draws = t.integer_or("draws", 1000000);
    } else {
      throw ConfigError(t.path("method"), "must be analytic, value or monte-carlo");
    }
    t.finish();
  } else {
    r.mark("target");
  }
  r.finish();
  return s;
}

json setting_to_json(const EstimatorSetting& s) {
  json j = {{"kind", std::string(to_string(s.kind))}, {"name", s.name}, {"p", s.p}, {"w", s.w}, {"wprime", s.wprime},
            {"kernel", std::string(to_string(s.kernel))}, {"demean", s.demean},
            {"regressor", s.regressor == Regressor::Treatment ? "treatment" : "instrument"}};
  if (s.bandwidth) j["bandwidth"] = *s.bandwidth;
  if (s.bandwidth_c) j["bandwidth_c"] = *s.bandwidth_c;
  json t = {{"method", std::string(to_string(s.target.method))}};
  if (s.target.method == TargetMethod::Value) t["value"] = s.target.value;
  if (s.target.method == TargetMethod::MonteCarlo) t["draws"] = s.target.draws;
  j["target"] = t;
  return j;
}

}  // namespace

ExperimentPlan parse_plan(const json& doc, const std::filesystem::path& base_dir) {
  ObjectReader r(doc, "");
  ExperimentPlan plan;
  const json& sc = r.raw("scenario");
  if (sc.is_string()) {
    std::filesystem::path file = sc.get<std::string>();
    if (file.is_relative()) file = base_dir / file;
    try {
      plan.scenario = parse_scenario(read_text_file(file));
    } catch (const ConfigError& e) {
      throw ConfigError("scenario." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
    }
  } else if (sc.is_object()) {
    try {
      plan.scenario = scenario_from_json(sc);
    } catch (const ConfigError& e) {
      throw ConfigError("scenario." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
    }
  } else {
    throw ConfigError("scenario", "expected a path or an inline scenario object");
  }
  for (double T : r.numbers("t_grid")) {
    if (T != std::floor(T)) throw ConfigError("t_grid", "entries must be integers");
    plan.t_grid.push_back(static_cast<int>(T));
  }
  plan.replications = r.integer("replications");
  const json& ests = r.raw("estimators");
  if (!ests.is_array() || ests.empty()) throw ConfigError("estimators", "expected a non-empty array");
  for (std::size_t i = 0; i < ests.size(); ++i)
    plan.estimators.push_back(read_setting(ObjectReader(ests[i], "estimators[" + std::to_string(i) + "]")));
  plan.parallelism = static_cast<int>(r.integer_or("parallelism", 1));
  const long long seed = r.integer_or("master_seed", 42);
  if (seed < 0) throw ConfigError("master_seed", "must be nonnegative");
  plan.master_seed = static_cast<std::uint64_t>(seed);
  r.finish();
  validate_plan(plan, 50);
  return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& file) {
  json doc;
  try {
    doc = json::parse(read_text_file(file));
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("not valid JSON: ") + e.what());
  }
  return parse_plan(doc, file.parent_path());
}

json plan_to_json(const ExperimentPlan& plan) {
  json ests = json::array();
  for (const auto& s : plan.estimators) ests.push_back(setting_to_json(s));
  return {{"scenario", to_json(plan.scenario)},
          {"t_grid", plan.t_grid},
          {"replications", plan.replications},
          {"estimators", ests},
          {"master_seed", plan.master_seed}};
}

void validate_plan(const ExperimentPlan& plan, long long min_replications) {
  if (plan.t_grid.empty()) throw ConfigError("t_grid", "must not be empty");
  for (std::size_t i = 0; i < plan.t_grid.size(); ++i) {
    if (plan.t_grid[i] < 2) throw ConfigError("t_grid", "entries must be at least 2");
    if (i > 0 && plan.t_grid[i] <= plan.t_grid[i - 1]) throw ConfigError("t_grid", "must be strictly ascending");
  }
  if (plan.replications < min_replications)
    throw ConfigError("replications", "must be at least " + std::to_string(min_replications));
  if (plan.parallelism < 1) throw ConfigError("parallelism", "must be at least 1");
  const ScenarioSpec& sc = plan.scenario;
  for (std::size_t i = 0; i < plan.estimators.size(); ++i) {
    const auto& s = plan.estimators[i];
    const std::string where = "estimators[" + std::to_string(i) + "]";
    if (s.p < 0 || s.p >= plan.t_grid.front()) throw ConfigError(where + ".p", "must lie in [0, min T)");
    switch (s.kind) {
      case EstimatorKind::HtLagp:
        if (!sc.discrete()) throw PreconditionError(where + ": ht_lagp needs a discrete mechanism");
        break;
      case EstimatorKind::KernelLagp:
      case EstimatorKind::KernelIrf:
        if (sc.discrete()) throw PreconditionError(where + ": kernel estimators need a continuous mechanism");
        break;
      case EstimatorKind::LpOls:
        if (s.regressor == Regressor::Instrument && !sc.instrument)
          throw PreconditionError(where + ": missing instrument for lp_ols on What");
        break;
      case EstimatorKind::LpIv:
        if (!sc.instrument) throw PreconditionError(where + ": missing instrument for lp_iv");
        break;
    }
    for (std::size_t j = 0; j < i; ++j)
      if (plan.estimators[j].name == s.name) throw ConfigError(where + ".name", "duplicate estimator name");
  }
}

const MetricsCell& MetricsTable::at(const std::string& estimator, int T) const {
  for (const auto& c : cells)
    if (c.estimator == estimator && c.T == T) return c;
  throw PreconditionError("no metrics cell for " + estimator + " at T=" + std::to_string(T));
}

std::vector<const MetricsCell*> MetricsTable::for_estimator(const std::string& estimator) const {
  std::vector<const MetricsCell*> out;
  for (const auto& c : cells)
    if (c.estimator == estimator) out.push_back(&c);
  return out;
}

double resolve_target(const ExperimentPlan& plan, const EstimatorSetting& s, int T) {
  const ScenarioSpec spec = plan.scenario.with_horizon(T);
  if (s.target.method == TargetMethod::Value) return s.target.value;
  if (s.target.method == TargetMethod::MonteCarlo) {
    switch (s.kind) {
      case EstimatorKind::LpOls:
        if (s.regressor == Regressor::Treatment)
          return beta_projections(spec, s.p, s.target.draws, plan.master_seed ^ 0x9e3779b97f4a7c15ULL).beta_U.value;
        break;
      case EstimatorKind::LpIv: break;
      default:
        return irf_mc(spec, s.p, s.w, s.wprime, {s.target.draws, plan.master_seed ^ 0x9e3779b97f4a7c15ULL, plan.parallelism})
            .value;
    }
    throw PreconditionError("oracle unavailable: no Monte Carlo target for " + s.name);
  }
  switch (s.kind) {
    case EstimatorKind::HtLagp:
    case EstimatorKind::KernelLagp: {
      std::vector<double> v;
      for (int t = s.p + 1; t <= T; ++t) v.push_back(analytic_effect(spec, t, s.p, s.w, s.wprime).value);
      return pairwise_sum(v) / static_cast<double>(v.size());
    }
    case EstimatorKind::KernelIrf:
      if (spec.outcome_law == OutcomeLaw::LinearAr) return irf_linear_gaussian(spec, s.p, s.w, s.wprime).value;
      return analytic_effect(spec, 0, s.p, s.w, s.wprime).value;
    case EstimatorKind::LpOls:
      if (s.regressor == Regressor::Instrument) return lp_iv_plim_oracle(spec, s.p).ols_on_instrument;
      return beta_u_star(spec, s.p).value;
    case EstimatorKind::LpIv: return lp_iv_plim_oracle(spec, s.p).ratio;
  }
  throw PreconditionError("oracle unavailable for " + s.name);
}

EstimateReport run_estimator(const EstimatorSetting& s, const PathBundle& b) {
  EstimateReport r;
  switch (s.kind) {
    case EstimatorKind::HtLagp: r = ht_lagp(b, s.p, s.w, s.wprime); break;
    case EstimatorKind::KernelLagp:
    case EstimatorKind::KernelIrf: {
      double h;
      if (s.bandwidth) {
        h = *s.bandwidth;
      } else {
        const double c = s.bandwidth_c ? *s.bandwidth_c : default_bandwidth_constant(b);
        h = bandwidth_rule(b.T(), s.p, c);
      }
      const KernelSpec k = KernelSpec::make(s.kernel, h);
      r = s.kind == EstimatorKind::KernelLagp ? kernel_lagp(b, s.p, s.w, s.wprime, k) : kernel_irf(b, s.p, s.w, s.wprime, k);
      break;
    }
    case EstimatorKind::LpOls: r = lp_ols(b, s.p, s.demean, s.regressor); break;
    case EstimatorKind::LpIv: r = lp_iv(b, s.p); break;
  }
  r.estimator = s.name;
  return r;
}

MetricsTable run_replications(const ExperimentPlan& plan) {
  validate_plan(plan, 1);
  const auto M = plan.replications;
  const std::size_t nT = plan.t_grid.size(), nE = plan.estimators.size();
  const std::size_t ncell = nT * nE;
  std::vector<double> targets(ncell);
  for (std::size_t e = 0; e < nE; ++e)
    for (std::size_t k = 0; k < nT; ++k) targets[e * nT + k] = resolve_target(plan, plan.estimators[e], plan.t_grid[k]);

  std::vector<ScenarioSpec> specs;
  for (int T : plan.t_grid) specs.push_back(plan.scenario.with_horizon(T));

  // est[cell][r], se[cell][r]; slots are written once, so scheduling cannot matter
  std::vector<std::vector<double>> est(ncell, std::vector<double>(static_cast<std::size_t>(M)));
  std::vector<std::vector<double>> se = est;
  parallel_for(M, plan.parallelism, [&](long long r) {
    for (std::size_t k = 0; k < nT; ++k) {
      const PathBundle b = simulate(specs[k], draw_noise(specs[k], plan.master_seed, static_cast<std::uint64_t>(r)));
      for (std::size_t e = 0; e < nE; ++e) {
        const EstimateReport rep = run_estimator(plan.estimators[e], b);
        est[e * nT + k][static_cast<std::size_t>(r)] = rep.point;
        se[e * nT + k][static_cast<std::size_t>(r)] = rep.std_error;
      }
    }
  });

  MetricsTable table;
  for (std::size_t e = 0; e < nE; ++e) {
    for (std::size_t k = 0; k < nT; ++k) {
      const std::size_t c = e * nT + k;
      MetricsCell cell;
      cell.estimator = plan.estimators[e].name;
      cell.T = plan.t_grid[k];
      cell.p = plan.estimators[e].p;
      cell.target = targets[c];
      cell.replications = M;
      const Eigen::Map<const Eigen::VectorXd> x(est[c].data(), M);
      const Eigen::Map<const Eigen::VectorXd> s(se[c].data(), M);
      cell.mean = mean(x);
      cell.bias = cell.mean - cell.target;
      cell.sd = std::sqrt(variance_n(x));
      const Eigen::VectorXd err2 = (x.array() - cell.target).square().matrix();
      cell.rmse = std::sqrt(mean(err2));
      cell.mean_se = mean(s);
      long long covered = 0;
      std::vector<double> z;
      for (long long r = 0; r < M; ++r) {
        const double lo = x[r] - z975 * s[r], hi = x[r] + z975 * s[r];
        if (lo <= cell.target && cell.target <= hi) ++covered;
        if (s[r] > 0.0) z.push_back((x[r] - cell.target) / s[r]);
        else ++cell.se_zero_excluded;
      }
      cell.coverage = static_cast<double>(covered) / static_cast<double>(M);
      cell.ks = z.empty() ? std::numeric_limits<double>::quiet_NaN() : normality_check(z);
      cell.estimates = est[c];
      cell.std_errors = se[c];
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

SlopeFit rate_slope(const std::vector<double>& T, const std::vector<double>& rmse) {
  if (T.size() != rmse.size()) throw PreconditionError("rate_slope: mismatched inputs");
  if (T.size() < 4) throw PreconditionError("rate_slope needs at least 4 grid points");
  const auto n = static_cast<Eigen::Index>(T.size());
  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(rmse[static_cast<std::size_t>(i)] > 0.0)) throw NumericalError("rate_slope needs positive RMSE values");
    x[i] = std::log(T[static_cast<std::size_t>(i)]);
    y[i] = std::log(rmse[static_cast<std::size_t>(i)]);
  }
  const Eigen::VectorXd xc = x.array() - x.mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  SlopeFit f;
  f.points = static_cast<int>(n);
  const double sxx = xc.squaredNorm();
  f.slope = xc.dot(yc) / sxx;
  const double rss = (yc - f.slope * xc).squaredNorm();
  f.se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  return f;
}

SlopeFit rate_slope(const MetricsTable& table, const std::string& estimator) {
  std::vector<double> T, rmse;
  for (const auto* c : table.for_estimator(estimator)) {
    T.push_back(c->T);
    rmse.push_back(c->rmse);
  }
  return rate_slope(T, rmse);
}

std::vector<CoverageRow> coverage(const MetricsTable& table) {
  std::vector<CoverageRow> out;
  for (const auto& c : table.cells) out.push_back({c.estimator, c.T, c.coverage, c.replications});
  return out;
}

double normality_check(const std::vector<double>& standardized) { return ks_distance(standardized); }

void write_experiment(const std::filesystem::path& dir, const ExperimentPlan& plan, const MetricsTable& table) {
  std::ostringstream m;
  m << "estimator,T,p,mean,bias,sd,rmse,coverage,mean_se,ks\n";
  for (const auto& c : table.cells)
    m << c.estimator << ',' << c.T << ',' << c.p << ',' << format_double(c.mean) << ',' << format_double(c.bias) << ','
      << format_double(c.sd) << ',' << format_double(c.rmse) << ',' << format_double(c.coverage) << ','
      << format_double(c.mean_se) << ',' << format_double(c.ks) << '\n';
  write_text_file(dir / "metrics.csv", m.str());

  std::ostringstream s;
  s << "estimator,p,slope,se,points\n";
  for (const auto& e : plan.estimators) {
    if (plan.t_grid.size() < 4) break;
    const SlopeFit f = rate_slope(table, e.name);
    s << e.name << ',' << e.p << ',' << format_double(f.slope) << ',' << format_double(f.se) << ',' << f.points << '\n';
  }
  write_text_file(dir / "slopes.csv", s.str());

  json manifest = {{"command", "experiment"},
                   {"plan", plan_to_json(plan)},
                   {"spec_hash", spec_hash(plan.scenario)},
                   {"master_seed", plan.master_seed}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace pots
