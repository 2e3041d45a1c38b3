#include "pseudosurv/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <rapidjson/document.h>
#include <rapidjson/error/en.h>
#include <rapidjson/schema.h>
#include <rapidjson/stringbuffer.h>

#include "pseudosurv/dataset.hpp"
#include "pseudosurv/error.hpp"
#include "pseudosurv/version.hpp"
#include "pseudosurv_report_schema.hpp"

namespace pseudosurv {

std::string_view tool_version() noexcept { return kVersion; }

std::string_view report_schema() noexcept { return kReportSchema; }

std::string format_mean_std(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f \xC2\xB1 %.2f", mean, std);
  return buf;
}

namespace {

std::string two_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string csv_cell(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string file_stem(std::string_view name) {
  std::string out;
  for (char c : name) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
    out += keep ? c : '_';
  }
  return out.empty() ? "curve" : out;
}

}  // namespace

void to_json(nlohmann::json& j, const NamedTest& t) { j = nlohmann::json{{"name", t.name}, {"result", t.result}}; }

std::vector<SummaryRow> summarize(std::span<const StrategyResult> cells) {
  if (cells.empty()) throw Error(Errc::EmptyInput, "nothing to summarize");
  std::vector<SummaryRow> rows;
  rows.reserve(cells.size());
  for (const auto& c : cells) {
    rows.push_back(SummaryRow{c.hmls_name, std::string(to_string(c.strategy)), c.feature_set_name,
                              format_mean_std(c.mean_accuracy, c.std_accuracy), two_decimals(c.external_accuracy),
                              c.mean_accuracy});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.mean > b.mean; });
  return rows;
}

nlohmann::json report_json(const RunReport& report) {
  nlohmann::json summary = nlohmann::json::array();
  if (!report.cells.empty()) {
    for (const auto& row : summarize(report.cells)) {
      summary.push_back({{"hmls_name", row.hmls_name},
                         {"strategy", row.strategy},
                         {"feature_set", row.feature_set},
                         {"mean_std", row.mean_std},
                         {"external", row.external}});
    }
  }
  nlohmann::json curves = nlohmann::json::array();
  for (const auto& [name, curve] : report.km_curves) curves.push_back({{"name", name}, {"curve", curve}});
  return nlohmann::json{{"tool", "pseudosurv"},
                        {"version", tool_version()},
                        {"command", report.command},
                        {"config", report.config},
                        {"cells", report.cells},
                        {"summary", std::move(summary)},
                        {"traces", report.traces},
                        {"survival", report.survival},
                        {"hdts", report.hdts},
                        {"comparisons", report.comparisons},
                        {"log_rank", report.log_rank},
                        {"km_curves", std::move(curves)},
                        {"notes", report.notes}};
}

std::vector<std::string> schema_errors(const nlohmann::json& document) {
  static const rapidjson::SchemaDocument schema = [] {
    rapidjson::Document d;
    d.Parse(kReportSchema.data(), kReportSchema.size());
    if (d.HasParseError()) throw Error(Errc::SchemaViolation, "bundled report schema does not parse");
    return rapidjson::SchemaDocument(d);
  }();
  rapidjson::Document doc;
  const std::string text = document.dump();
  doc.Parse(text.c_str(), text.size());
  if (doc.HasParseError()) return {std::string("unparseable: ") + rapidjson::GetParseError_En(doc.GetParseError())};
  rapidjson::SchemaValidator validator(schema);
  if (doc.Accept(validator)) return {};
  rapidjson::StringBuffer where, rule;
  validator.GetInvalidDocumentPointer().StringifyUriFragment(where);
  validator.GetInvalidSchemaPointer().StringifyUriFragment(rule);
  return {std::string("at ") + where.GetString() + ": violates " + validator.GetInvalidSchemaKeyword() + " (" +
          rule.GetString() + ")"};
}

namespace {

class Emitter {
 public:
  explicit Emitter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(Errc::IoError, "cannot create '" + dir_.string() + "': " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot open '" + path.string() + "' for writing");
    out << content;
    out.close();
    if (!out) throw Error(Errc::IoError, "failed writing '" + path.string() + "'");
    manifest_.push_back(name);
  }

  std::vector<std::string> take() { return std::move(manifest_); }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> manifest_;
};

std::string tests_csv(const RunReport& r) {
  std::ostringstream out;
  out << "kind,name,statistic,p_value,method\n";
  auto rows = [&](std::string_view kind, const std::vector<NamedTest>& tests) {
    for (const auto& t : tests) {
      out << kind << ',' << csv_cell(t.name) << ',' << format_number(t.result.statistic) << ','
          << format_number(t.result.p_value) << ',' << t.result.method << '\n';
    }
  };
  rows("hdts", r.hdts);
  rows("paired", r.comparisons);
  rows("log_rank", r.log_rank);
  return out.str();
}

}  // namespace

std::vector<std::string> emit_report(const RunReport& report, const std::filesystem::path& dir) {
  const auto doc = report_json(report);
  if (const auto errors = schema_errors(doc); !errors.empty()) {
    throw Error(Errc::SchemaViolation, "report.json " + errors.front());
  }
  Emitter emit(dir);
  emit.write("report.json", doc.dump(2) + "\n");

  if (!report.cells.empty()) {
    std::ostringstream summary;
    summary << "hmls_name,strategy,feature_set,mean_std,external\n";
    for (const auto& row : summarize(report.cells)) {
      summary << csv_cell(row.hmls_name) << ',' << row.strategy << ',' << csv_cell(row.feature_set) << ','
              << row.mean_std << ',' << row.external << '\n';
    }
    emit.write("summary.csv", summary.str());

    std::ostringstream folds;
    folds << "hmls_name,strategy,feature_set,fold,accuracy\n";
    for (const auto& c : report.cells) {
      for (std::size_t f = 0; f < c.fold_accuracies.size(); ++f) {
        folds << csv_cell(c.hmls_name) << ',' << to_string(c.strategy) << ',' << csv_cell(c.feature_set_name) << ','
              << f << ',' << format_number(c.fold_accuracies[f]) << '\n';
      }
    }
    emit.write("folds.csv", folds.str());
  }

  if (!report.survival.empty()) {
    std::ostringstream table;
    table << "model,mean_std,external,mean_c_index,std_c_index,external_c_index,log_rank_statistic,log_rank_p\n";
    for (const auto& s : report.survival) {
      table << s.model << ',' << format_mean_std(s.mean_c_index, s.std_c_index) << ','
            << two_decimals(s.external_c_index) << ',' << format_number(s.mean_c_index) << ','
            << format_number(s.std_c_index) << ',' << format_number(s.external_c_index) << ',';
      if (s.log_rank) {
        table << format_number(s.log_rank->statistic) << ',' << format_number(s.log_rank->p_value);
      } else {
        table << ',';
      }
      table << '\n';
    }
    emit.write("survival.csv", table.str());
  }

  if (!report.hdts.empty() || !report.comparisons.empty() || !report.log_rank.empty()) emit.write("tests.csv", tests_csv(report));

  for (const auto& [name, curve] : report.km_curves) emit.write("km_" + file_stem(name) + ".csv", km_curve_csv(name, curve));
  if (report.svg && !report.km_curves.empty()) emit.write("km.svg", km_svg(report.km_curves));

  if (report.wall_seconds) {
    emit.write("timing.json", nlohmann::json{{"wall_seconds", *report.wall_seconds}}.dump(2) + "\n");
  }
  return emit.take();
}

}  // namespace pseudosurv
