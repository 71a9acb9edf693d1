#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "pots/estimands.hpp"
#include "pots/estimators.hpp"

namespace pots {

/// 17 significant digits, enough to round-trip a double.
std::string format_double(double x);

void write_bundle_csv(std::ostream& os, const PathBundle& bundle);
/// Header `t,W,Y[,What],propensity`. A bundle is discrete when every W is 0 or 1.
PathBundle read_bundle_csv(std::istream& is);

void write_estimands_csv(std::ostream& os, const std::vector<EstimandValue>& rows);
nlohmann::json estimands_to_json(const std::vector<EstimandValue>& rows);

nlohmann::json diagnostics_json(const EstimateReport& r);
void write_reports_csv(std::ostream& os, const std::vector<EstimateReport>& rows);
nlohmann::json reports_to_json(const std::vector<EstimateReport>& rows);

std::string read_text_file(const std::filesystem::path& file);
void write_text_file(const std::filesystem::path& file, const std::string& text);

}  // namespace pots
