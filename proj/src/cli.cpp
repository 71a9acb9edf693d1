#include "pots/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "pots/estimands.hpp"
#include "pots/estimators.hpp"
#include "pots/harness.hpp"
#include "pots/io.hpp"

namespace pots {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::uint64_t seed = kDefaultSeed;
  std::string out;
  std::string scenario;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "master seed")->capture_default_str();
  cmd->add_option("--out", c.out, "output directory (stdout when omitted)");
  cmd->add_option("--scenario", c.scenario, "scenario JSON file");
  cmd->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
}

ScenarioSpec load_scenario(const std::string& path) {
  if (path.empty()) throw ConfigError("--scenario", "a scenario file is required");
  return parse_scenario(read_text_file(path));
}

/// Writes `body` to out/<name> and a manifest beside it, or to stdout.
void emit(const Common& c, const std::string& name, const std::string& body, const json& manifest, std::ostream& out) {
  if (c.out.empty()) {
    out << body;
    return;
  }
  write_text_file(fs::path(c.out) / name, body);
  write_text_file(fs::path(c.out) / "manifest.json", manifest.dump(2) + "\n");
}

std::string ext(const Common& c) { return c.format == "json" ? ".json" : ".csv"; }

// ---------------------------------------------------------------------------

struct SimulateArgs {
  Common c;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const ScenarioSpec spec = load_scenario(a.c.scenario);
  const PathBundle b = simulate(spec, draw_noise(spec, a.c.seed, 0));
  std::ostringstream body;
  if (a.c.format == "json") {
    json j = {{"W", std::vector<double>(b.W.data(), b.W.data() + b.T())},
              {"Y", std::vector<double>(b.Y.data(), b.Y.data() + b.T())},
              {"propensity", std::vector<double>(b.propensity.data(), b.propensity.data() + b.T())}};
    if (b.has_instrument()) j["What"] = std::vector<double>(b.What.data(), b.What.data() + b.T());
    body << j.dump() << "\n";
  } else {
    write_bundle_csv(body, b);
  }
  const json manifest = {{"command", "simulate"}, {"scenario", to_json(spec)}, {"spec_hash", spec_hash(spec)},
                         {"seed", a.c.seed}, {"format", a.c.format}};
  emit(a.c, "bundle" + ext(a.c), body.str(), manifest, out);
  return 0;
}

// ---------------------------------------------------------------------------

struct EstimandArgs {
  Common c;
  std::string label;
  int t = 0;
  int p = 1;
  double w = 1.0;
  double wprime = 0.0;
  long long M = 10000;
  std::string method = "auto";
  int threads = 1;
};

EstimandValue analytic_average(const ScenarioSpec& spec, const std::string& label, int p, double w, double wprime) {
  double sum = 0.0;
  for (int t = p + 1; t <= spec.horizon; ++t) sum += analytic_effect(spec, t, p, w, wprime).value;
  EstimandValue v;
  v.label = label;
  v.p = p;
  v.w = w;
  v.wprime = wprime;
  v.method = Method::Analytic;
  v.value = sum / (spec.horizon - p);
  return v;
}

EstimandValue compute_estimand(const ScenarioSpec& spec, const EstimandArgs& a, Method method) {
  const int t = a.t == 0 ? spec.horizon : a.t;
  const McOptions mc{a.M, a.c.seed, a.threads};
  auto world = [&] { return make_world(spec, a.c.seed, 0); };
  const std::string& L = a.label;
  auto unsupported = [&]() -> EstimandValue {
    throw PreconditionError("method " + std::string(to_string(method)) + " is not available for label " + L);
  };

  if (method == Method::ExactEnumeration) {
    if (!spec.discrete()) throw PreconditionError("exact requires discrete mechanism");
    if (L == "tau") return lag_p_effect(world(), t, a.p, a.w, a.wprime);
    if (L == "tau_star") return weighted_effect_exact(world(), t, a.p, a.w, a.wprime);
    if (L == "tau_star_bar") return avg_weighted_effect_exact(world(), a.p, a.w, a.wprime);
    return unsupported();
  }

  if (method == Method::Analytic) {
    EstimandValue v;
    if (L == "tau_star" || L == "crf") {
      v = analytic_effect(spec, t, a.p, a.w, a.wprime);
      v.t = t;
    } else if (L == "tau_star_bar" || L == "crf_bar") {
      v = analytic_average(spec, L, a.p, a.w, a.wprime);
    } else if (L == "irf") {
      if (!spec.time_invariant()) throw PreconditionError("irf needs time-invariant parameters");
      v = analytic_effect(spec, 0, a.p, a.w, a.wprime);
    } else if (L == "beta_L") {
      if (!spec.shocked() || spec.outcome_law == OutcomeLaw::BinaryDemo)
        throw PreconditionError("closed-form projections need a shocked linear scenario");
      v.value = spec.beta(t, a.p);
      v.t = t;
    } else if (L == "beta_U" || L == "beta_U_star") {
      v = beta_u_star(spec, a.p);
    } else if (L == "beta_IV") {
      v.value = lp_iv_plim_oracle(spec, a.p).ratio;
    } else {
      return unsupported();
    }
    v.label = L;
    v.p = a.p;
    if (L.rfind("beta", 0) == 0) {
      v.w = 1.0;
      v.wprime = 0.0;
    } else {
      v.w = a.w;
      v.wprime = a.wprime;
    }
    v.method = Method::Analytic;
    return v;
  }

  if (L == "tau_star") return weighted_effect(world(), t, a.p, a.w, a.wprime, mc);
  if (L == "crf") return crf(world(), t, a.p, a.w, a.wprime, mc);
  if (L == "tau_star_bar") return avg_weighted_effect(world(), a.p, a.w, a.wprime, mc);
  if (L == "crf_bar") return avg_crf(world(), a.p, a.w, a.wprime, mc);
  if (L == "irf") return irf_mc(spec, a.p, a.w, a.wprime, mc);
  if (L == "beta_L" || L == "beta_U") {
    const BetaProjections bp = beta_projections(spec, a.p, a.M, a.c.seed);
    if (L == "beta_U") return bp.beta_U;
    if (t <= a.p) throw PreconditionError("beta_L needs t > p");
    return bp.beta_L[static_cast<std::size_t>(t - a.p - 1)];
  }
  return unsupported();
}

int cmd_estimand(const EstimandArgs& a, std::ostream& out) {
  static const std::set<std::string> labels{"tau", "tau_star", "crf", "tau_star_bar", "crf_bar", "irf",
                                            "beta_L", "beta_U", "beta_U_star", "beta_IV"};
  if (!labels.count(a.label)) throw ConfigError("--label", "unknown estimand '" + a.label + "'");
  const ScenarioSpec spec = load_scenario(a.c.scenario);
  if (a.t < 0 || a.t > spec.horizon) throw ConfigError("--t", "must lie in [1, horizon]");

  EstimandValue v;
  if (a.method == "auto") {
    std::optional<EstimandValue> got;
    if (spec.discrete() && (a.label == "tau" || a.label == "tau_star" || a.label == "tau_star_bar"))
      got = compute_estimand(spec, a, Method::ExactEnumeration);
    if (!got && a.label == "tau") got = lag_p_effect(make_world(spec, a.c.seed, 0), a.t == 0 ? spec.horizon : a.t, a.p, a.w, a.wprime);
    if (!got) {
      try {
        got = compute_estimand(spec, a, Method::Analytic);
      } catch (const PreconditionError&) {
      }
    }
    if (!got) got = compute_estimand(spec, a, Method::MonteCarlo);
    v = *got;
  } else if (a.method == "exact") {
    v = compute_estimand(spec, a, Method::ExactEnumeration);
  } else if (a.method == "analytic") {
    v = compute_estimand(spec, a, Method::Analytic);
  } else {
    v = compute_estimand(spec, a, Method::MonteCarlo);
  }

  std::ostringstream body;
  if (a.c.format == "json") body << estimands_to_json({v}).dump(2) << "\n";
  else write_estimands_csv(body, {v});
  const json manifest = {{"command", "estimand"}, {"scenario", to_json(spec)}, {"spec_hash", spec_hash(spec)},
                         {"seed", a.c.seed}, {"label", a.label}, {"t", a.t}, {"p", a.p}, {"w", a.w},
                         {"wprime", a.wprime}, {"M", a.M}, {"method", a.method}};
  emit(a.c, "estimand" + ext(a.c), body.str(), manifest, out);
  return 0;
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
  Common c;
  std::string bundle;
  std::string estimator;
  int p = 1;
  double w = 1.0;
  double wprime = 0.0;
  std::string kernel = "gaussian";
  std::optional<double> bandwidth;
  std::optional<double> bandwidth_c;
  bool demean = false;
  std::string regressor = "treatment";
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  std::ifstream in(a.bundle);
  if (!in) throw ConfigError("--bundle", "cannot open " + a.bundle);
  const PathBundle b = read_bundle_csv(in);
  EstimatorSetting s;
  static const std::map<std::string, EstimatorKind> kinds{{"ht_lagp", EstimatorKind::HtLagp},
                                                          {"kernel_lagp", EstimatorKind::KernelLagp},
                                                          {"kernel_irf", EstimatorKind::KernelIrf},
                                                          {"lp_ols", EstimatorKind::LpOls},
                                                          {"lp_iv", EstimatorKind::LpIv}};
  const auto it = kinds.find(a.estimator);
  if (it == kinds.end()) throw ConfigError("--estimator", "unknown estimator '" + a.estimator + "'");
  s.kind = it->second;
  s.name = a.estimator;
  s.p = a.p;
  s.w = a.w;
  s.wprime = a.wprime;
  s.kernel = parse_kernel(a.kernel);
  s.bandwidth = a.bandwidth;
  s.bandwidth_c = a.bandwidth_c;
  s.demean = a.demean;
  s.regressor = a.regressor == "instrument" ? Regressor::Instrument : Regressor::Treatment;
  EstimateReport r = run_estimator(s, b);
  if (s.regressor == Regressor::Instrument && s.kind == EstimatorKind::LpOls) r.estimator = "lp_ols_what";

  std::ostringstream body;
  if (a.c.format == "json") body << reports_to_json({r}).dump(2) << "\n";
  else write_reports_csv(body, {r});
  json manifest = {{"command", "estimate"}, {"bundle", a.bundle}, {"estimator", a.estimator}, {"p", a.p},
                   {"w", a.w}, {"wprime", a.wprime}, {"kernel", a.kernel}, {"demean", a.demean},
                   {"regressor", a.regressor}, {"seed", a.c.seed}};
  if (a.bandwidth) manifest["bandwidth"] = *a.bandwidth;
  if (a.bandwidth_c) manifest["bandwidth_c"] = *a.bandwidth_c;
  emit(a.c, "report" + ext(a.c), body.str(), manifest, out);
  return 0;
}

// ---------------------------------------------------------------------------

struct ExperimentArgs {
  Common c;
  std::string plan;
  int threads = 0;
  bool seed_given = false;
};

int cmd_experiment(const ExperimentArgs& a, std::ostream& out) {
  ExperimentPlan plan = load_plan(a.plan);
  if (!a.c.scenario.empty()) plan.scenario = load_scenario(a.c.scenario);
  if (a.seed_given) plan.master_seed = a.c.seed;
  if (a.threads > 0) plan.parallelism = a.threads;
  const MetricsTable table = run_replications(plan);
  if (a.c.out.empty()) {
    out << "estimator,T,p,mean,bias,sd,rmse,coverage,mean_se,ks\n";
    for (const auto& c : table.cells)
      out << c.estimator << ',' << c.T << ',' << c.p << ',' << format_double(c.mean) << ',' << format_double(c.bias)
          << ',' << format_double(c.sd) << ',' << format_double(c.rmse) << ',' << format_double(c.coverage) << ','
          << format_double(c.mean_se) << ',' << format_double(c.ks) << '\n';
    return 0;
  }
  write_experiment(a.c.out, plan, table);
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  Common c;
  std::vector<std::string> inputs;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<fs::path> runs;
  for (const auto& in : a.inputs) {
    const fs::path dir(in);
    if (!fs::is_directory(dir)) throw PreconditionError("not a directory: " + in);
    if (fs::exists(dir / "metrics.csv")) {
      runs.push_back(dir);
      continue;
    }
    std::vector<fs::path> subs;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_directory() && fs::exists(e.path() / "metrics.csv")) subs.push_back(e.path());
    std::sort(subs.begin(), subs.end());
    runs.insert(runs.end(), subs.begin(), subs.end());
  }
  if (runs.empty()) throw PreconditionError("no metrics found: the directory holds no metrics.csv");

  std::map<std::string, fs::path> seen;
  std::vector<std::pair<std::string, fs::path>> kept;
  for (const auto& r : runs) {
    const std::string manifest = fs::exists(r / "manifest.json") ? read_text_file(r / "manifest.json") : r.string();
    const std::string key = fs::exists(r / "manifest.json") ? json::parse(manifest).dump() : manifest;
    if (auto it = seen.find(key); it != seen.end()) {
      err << "warning: " << r.string() << " has the same manifest as " << it->second.string() << "; skipped\n";
      continue;
    }
    seen.emplace(key, r);
    kept.emplace_back(r.filename().string(), r);
  }

  std::ostringstream summary, longf;
  summary << "run,estimator,T,p,mean,bias,sd,rmse,coverage,mean_se,ks\n";
  longf << "run,estimator,T,p,metric,value\n";
  static const std::vector<std::string> metrics{"mean", "bias", "sd", "rmse", "coverage", "mean_se", "ks"};
  json rows = json::array();
  for (const auto& [name, dir] : kept) {
    std::istringstream in(read_text_file(dir / "metrics.csv"));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split_csv(line);
      if (cells.size() != 10) throw ConfigError((dir / "metrics.csv").string(), "malformed row");
      summary << name << ',' << line << '\n';
      json row = {{"run", name}, {"estimator", cells[0]}, {"T", std::stoi(cells[1])}, {"p", std::stoi(cells[2])}};
      for (std::size_t k = 0; k < metrics.size(); ++k) {
        longf << name << ',' << cells[0] << ',' << cells[1] << ',' << cells[2] << ',' << metrics[k] << ','
              << cells[3 + k] << '\n';
        row[metrics[k]] = cells[3 + k];
      }
      rows.push_back(row);
    }
  }
  if (a.c.out.empty()) {
    out << (a.c.format == "json" ? rows.dump(2) + "\n" : summary.str());
    return 0;
  }
  const fs::path dir(a.c.out);
  if (a.c.format == "json") write_text_file(dir / "summary.json", rows.dump(2) + "\n");
  else write_text_file(dir / "summary.csv", summary.str());
  write_text_file(dir / "long.csv", longf.str());
  json sources = json::array();
  for (const auto& [name, path] : kept) sources.push_back(path.string());
  write_text_file(dir / "manifest.json", json{{"command", "report"}, {"runs", sources}}.dump(2) + "\n");
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"potential-outcome time series laboratory", "pots"};
  app.require_subcommand(1);
  app.allow_extras(false);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "simulate a factual path");
  add_common(c_sim, sim.c);

  EstimandArgs est;
  auto* c_est = app.add_subcommand("estimand", "compute a ground-truth causal estimand");
  add_common(c_est, est.c);
  c_est->add_option("--label", est.label, "tau, tau_star, crf, tau_star_bar, crf_bar, irf, beta_L, beta_U, beta_U_star, beta_IV")
      ->required();
  c_est->add_option("--t", est.t, "period (defaults to the horizon)");
  c_est->add_option("--p", est.p, "lag")->capture_default_str();
  c_est->add_option("--w", est.w)->capture_default_str();
  c_est->add_option("--wprime", est.wprime)->capture_default_str();
  c_est->add_option("--M", est.M, "Monte Carlo draws")->capture_default_str();
  c_est->add_option("--method", est.method)
      ->check(CLI::IsMember({"auto", "exact", "analytic", "monte-carlo"}))
      ->capture_default_str();
  c_est->add_option("--threads", est.threads)->check(CLI::PositiveNumber);

  EstimateArgs ea;
  auto* c_ea = app.add_subcommand("estimate", "run one estimator on a bundle CSV");
  add_common(c_ea, ea.c);
  c_ea->add_option("--bundle", ea.bundle, "bundle CSV (t,W,Y[,What],propensity)")->required();
  c_ea->add_option("--estimator", ea.estimator, "ht_lagp, kernel_lagp, kernel_irf, lp_ols, lp_iv")->required();
  c_ea->add_option("--p", ea.p)->capture_default_str();
  c_ea->add_option("--w", ea.w)->capture_default_str();
  c_ea->add_option("--wprime", ea.wprime)->capture_default_str();
  c_ea->add_option("--kernel", ea.kernel)->check(CLI::IsMember({"gaussian", "epanechnikov"}))->capture_default_str();
  c_ea->add_option("--bandwidth", ea.bandwidth, "fixed bandwidth h");
  c_ea->add_option("--bandwidth-c", ea.bandwidth_c, "constant c in h = c (T-p)^(-1/5)");
  c_ea->add_flag("--demean", ea.demean);
  c_ea->add_option("--regressor", ea.regressor)->check(CLI::IsMember({"treatment", "instrument"}))->capture_default_str();

  ExperimentArgs ex;
  auto* c_ex = app.add_subcommand("experiment", "run a Monte Carlo experiment plan");
  add_common(c_ex, ex.c);
  c_ex->add_option("--plan", ex.plan, "plan JSON")->required();
  c_ex->add_option("--threads", ex.threads, "worker count (overrides the plan)")->check(CLI::PositiveNumber);

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "assemble metrics directories into summary tables");
  add_common(c_rep, rep.c);
  c_rep->add_option("--in", rep.inputs, "metrics directory (repeatable)")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (c_sim->parsed()) return cmd_simulate(sim, out);
    if (c_est->parsed()) return cmd_estimand(est, out);
    if (c_ea->parsed()) return cmd_estimate(ea, out);
    if (c_ex->parsed()) {
      ex.seed_given = c_ex->count("--seed") > 0;
      return cmd_experiment(ex, out);
    }
    if (c_rep->parsed()) return cmd_report(rep, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

}  // namespace pots
