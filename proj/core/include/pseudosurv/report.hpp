#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pseudosurv/ssl_engine.hpp"
#include "pseudosurv/stats.hpp"
#include "pseudosurv/survival.hpp"
#include "pseudosurv/survival_pipeline.hpp"

namespace pseudosurv {

std::string_view tool_version() noexcept;

struct NamedTest {
  std::string name;
  TestResult result;
};

void to_json(nlohmann::json& j, const NamedTest& t);

struct RunReport {
  std::string command;
  nlohmann::json config = nlohmann::json::object();  ///< full echo, defaults included
  std::vector<StrategyResult> cells;
  std::vector<nlohmann::json> traces;  ///< one RunTrace per cell, same order
  std::vector<SurvivalRunResult> survival;
  std::vector<NamedTest> hdts;
  std::vector<NamedTest> comparisons;
  std::vector<NamedTest> log_rank;
  std::vector<std::pair<std::string, KmCurve>> km_curves;
  std::vector<std::string> notes;
  /// Wall-clock seconds; written to timing.json, never into report.json.
  std::optional<double> wall_seconds;
  bool svg = false;
};

struct SummaryRow {
  std::string hmls_name;
  std::string strategy;
  std::string feature_set;
  std::string mean_std;  ///< "%.2f ± %.2f"
  std::string external;  ///< "%.2f"
  double mean = 0.0;
};

/// One row per cell, sorted by mean accuracy descending (stable).
std::vector<SummaryRow> summarize(std::span<const StrategyResult> cells);

std::string format_mean_std(double mean, double std);

nlohmann::json report_json(const RunReport& report);

/// Problems found validating `document` against the bundled report schema;
/// empty when valid.
std::vector<std::string> schema_errors(const nlohmann::json& document);
std::string_view report_schema() noexcept;

/// Writes report.json plus CSV tables, one CSV per KM curve and optional SVG
/// into `dir` (created if missing). Returns written file names relative to
/// `dir`, in write order.
std::vector<std::string> emit_report(const RunReport& report, const std::filesystem::path& dir);

}  // namespace pseudosurv
