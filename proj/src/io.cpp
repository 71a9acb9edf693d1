#include "pots/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace pots {

using nlohmann::json;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_bundle_csv(std::ostream& os, const PathBundle& b) {
  os << (b.has_instrument() ? "t,W,Y,What,propensity\n" : "t,W,Y,propensity\n");
  for (int i = 0; i < b.T(); ++i) {
    os << i + 1 << ',' << format_double(b.W[i]) << ',' << format_double(b.Y[i]) << ',';
    if (b.has_instrument()) os << format_double(b.What[i]) << ',';
    os << format_double(b.propensity[i]) << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, int row) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bundle", "row " + std::to_string(row) + ": '" + s + "' is not a number");
  }
}

}  // namespace

PathBundle read_bundle_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("bundle", "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  const bool with_what = header == std::vector<std::string>{"t", "W", "Y", "What", "propensity"};
  if (!with_what && header != std::vector<std::string>{"t", "W", "Y", "propensity"})
    throw ConfigError("bundle", "header must be t,W,Y,What,propensity or t,W,Y,propensity");
  std::vector<double> W, Y, What, P;
  int row = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw ConfigError("bundle", "row " + std::to_string(row) + ": wrong column count");
    if (to_double(cells[0], row) != row) throw ConfigError("bundle", "row " + std::to_string(row) + ": t out of sequence");
    W.push_back(to_double(cells[1], row));
    Y.push_back(to_double(cells[2], row));
    if (with_what) What.push_back(to_double(cells[3], row));
    P.push_back(to_double(cells.back(), row));
  }
  if (row < 2) throw ConfigError("bundle", "needs at least two rows");
  PathBundle b;
  auto vec = [](const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval(); };
  b.W = vec(W);
  b.Y = vec(Y);
  if (with_what) b.What = vec(What);
  b.propensity = vec(P);
  b.discrete = (b.W.array() == 0.0 || b.W.array() == 1.0).all();
  return b;
}

void write_estimands_csv(std::ostream& os, const std::vector<EstimandValue>& rows) {
  os << "label,t,p,w,wprime,value,method,mc_draws,mc_se\n";
  for (const auto& r : rows)
    os << r.label << ',' << r.t << ',' << r.p << ',' << format_double(r.w) << ',' << format_double(r.wprime) << ','
       << format_double(r.value) << ',' << to_string(r.method) << ',' << r.mc_draws << ',' << format_double(r.mc_se)
       << '\n';
}

json estimands_to_json(const std::vector<EstimandValue>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"label", r.label}, {"t", r.t}, {"p", r.p}, {"w", r.w}, {"wprime", r.wprime}, {"value", r.value},
                   {"method", std::string(to_string(r.method))}, {"mc_draws", r.mc_draws}, {"mc_se", r.mc_se}});
  return out;
}

json diagnostics_json(const EstimateReport& r) {
  json d = json::object();
  for (const auto& [k, v] : r.diagnostics) d[k] = v;
  return d;
}

void write_reports_csv(std::ostream& os, const std::vector<EstimateReport>& rows) {
  os << "estimator,p,point,se,ci_low,ci_high,diag_json\n";
  for (const auto& r : rows) {
    std::string diag = diagnostics_json(r).dump();
    std::string quoted = "\"";
    for (char c : diag) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
    quoted += '"';
    os << r.estimator << ',' << r.p << ',' << format_double(r.point) << ',' << format_double(r.std_error) << ','
       << format_double(r.ci_low) << ',' << format_double(r.ci_high) << ',' << quoted << '\n';
  }
}

json reports_to_json(const std::vector<EstimateReport>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"estimator", r.estimator}, {"p", r.p}, {"point", r.point}, {"se", r.std_error},
                   {"ci_low", r.ci_low}, {"ci_high", r.ci_high}, {"diagnostics", diagnostics_json(r)}});
  return out;
}

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError(file.string(), "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw PreconditionError("cannot write " + file.string());
  out << text;
}

}  // namespace pots
