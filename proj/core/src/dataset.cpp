#include "pseudosurv/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "pseudosurv/error.hpp"
#include "pseudosurv/random.hpp"

namespace pseudosurv {

namespace {

constexpr std::string_view kIdColumn = "sample_id";
constexpr std::string_view kLabelColumn = "label";
constexpr std::string_view kTimeColumn = "time";
constexpr std::string_view kEventColumn = "event";

// Baseline hazard of the synthetic generator, per month.
constexpr double kBaselineHazard = 1.0 / 24.0;

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string where(std::size_t data_row, std::string_view column) {
  std::ostringstream os;
  os << "row " << data_row + 1 << " (line " << data_row + 2 << "), column '" << column << "'";
  return os.str();
}

double parse_number(std::string_view cell, std::size_t row, std::string_view column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc{} || ptr != last) {
    if (ec == std::errc::result_out_of_range) {
      throw Error(Errc::NonFiniteCell, where(row, column) + " overflows: '" + std::string(cell) + "'");
    }
    throw Error(Errc::NonNumericCell, where(row, column) + " is not numeric: '" + std::string(cell) + "'");
  }
  if (!std::isfinite(value)) {
    throw Error(Errc::NonFiniteCell, where(row, column) + " is not finite: '" + std::string(cell) + "'");
  }
  return value;
}

}  // namespace

OutcomeLabel label_from_code(int code) {
  if (code == 1) return OutcomeLabel::Alive;
  if (code == 2) return OutcomeLabel::Deceased;
  throw Error(Errc::InvalidLabel, "class code must be 1 or 2, got " + std::to_string(code));
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

FeatureTable FeatureTable::subset(std::span<const std::size_t> rows) const {
  FeatureTable out;
  out.feature_names = feature_names;
  out.sample_ids.reserve(rows.size());
  for (std::size_t r : rows) out.sample_ids.push_back(sample_ids.at(r));
  out.values = select_rows(values, rows);
  if (labels) {
    out.labels.emplace();
    for (std::size_t r : rows) out.labels->push_back(labels->at(r));
  }
  if (survival) {
    out.survival.emplace();
    for (std::size_t r : rows) out.survival->push_back(survival->at(r));
  }
  return out;
}

bool ValidationReport::ok() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(std::string_view name) const noexcept {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

ValidationReport validate_table(const FeatureTable& t) {
  ValidationReport report;
  auto add = [&](const char* name) -> ValidationCheck& {
    report.checks.push_back(ValidationCheck{name, true, {}});
    return report.checks.back();
  };
  auto fail = [](ValidationCheck& c, std::string detail, std::optional<std::size_t> row = {},
                 std::optional<std::size_t> col = {}) {
    c.passed = false;
    c.issues.push_back(ValidationIssue{std::move(detail), row, col});
  };

  const auto n = t.sample_ids.size();
  const auto p = t.feature_names.size();

  auto& shape = add(checks::kShape);
  if (static_cast<std::size_t>(t.values.rows()) != n) {
    fail(shape, "values has " + std::to_string(t.values.rows()) + " rows but " + std::to_string(n) +
                    " sample ids");
  }
  if (static_cast<std::size_t>(t.values.cols()) != p) {
    fail(shape, "values has " + std::to_string(t.values.cols()) + " columns but " +
                    std::to_string(p) + " feature names");
  }
  if (n == 0) fail(shape, "table has no rows");

  auto& finite = add(checks::kNonFiniteCell);
  for (Eigen::Index j = 0; j < t.values.cols(); ++j) {
    for (Eigen::Index i = 0; i < t.values.rows(); ++i) {
      if (!std::isfinite(t.values(i, j))) {
        fail(finite, "non-finite value", static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
    }
  }
  // Column-major scan; report in row-major order.
  std::sort(finite.issues.begin(), finite.issues.end(), [](const auto& a, const auto& b) {
    return std::tie(*a.row, *a.col) < std::tie(*b.row, *b.col);
  });

  auto& dup = add(checks::kDuplicateId);
  auto& empty_id = add(checks::kEmptyId);
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = t.sample_ids[i];
    if (id.empty()) fail(empty_id, "empty sample id", i);
    auto [it, inserted] = seen.emplace(id, i);
    if (!inserted) fail(dup, "sample id '" + id + "' repeats row " + std::to_string(it->second), i);
  }

  auto& dup_feat = add(checks::kDuplicateFeature);
  auto& empty_feat = add(checks::kEmptyFeatureName);
  std::unordered_set<std::string> names;
  for (std::size_t j = 0; j < p; ++j) {
    const auto& name = t.feature_names[j];
    if (name.empty()) fail(empty_feat, "empty feature name", {}, j);
    if (!names.insert(name).second) fail(dup_feat, "feature name '" + name + "' repeats", {}, j);
  }

  auto& len = add(checks::kLengthMismatch);
  if (t.labels && t.labels->size() != n) {
    fail(len, "labels has " + std::to_string(t.labels->size()) + " entries for " +
                  std::to_string(n) + " rows");
  }
  if (t.survival && t.survival->size() != n) {
    fail(len, "survival has " + std::to_string(t.survival->size()) + " entries for " +
                  std::to_string(n) + " rows");
  }

  auto& surv = add(checks::kSurvivalTime);
  if (t.survival) {
    for (std::size_t i = 0; i < t.survival->size(); ++i) {
      const double time = (*t.survival)[i].time;
      if (!(time > 0.0) || !std::isfinite(time)) fail(surv, "survival time must be finite and > 0", i);
    }
  }
  return report;
}

FeatureTable parse_feature_table(std::istream& in, bool expect_labels, bool expect_survival) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::EmptyTable, "missing header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
  const auto header = split_line(trim(line));
  if (header.empty() || trim(header[0]) != kIdColumn) {
    throw Error(Errc::MalformedTable, "first header cell must be 'sample_id'");
  }

  std::optional<std::size_t> label_col, time_col, event_col;
  std::vector<std::size_t> feature_cols;
  FeatureTable table;
  std::set<std::string, std::less<>> header_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name(trim(header[c]));
    if (!header_names.insert(name).second) {
      throw Error(Errc::MalformedTable, "duplicate column '" + name + "'");
    }
    if (c == 0) continue;
    if (name.empty()) throw Error(Errc::MalformedTable, "empty column name at position " + std::to_string(c + 1));
    if (name == kLabelColumn) {
      label_col = c;
    } else if (name == kTimeColumn) {
      time_col = c;
    } else if (name == kEventColumn) {
      event_col = c;
    } else if (name == kIdColumn) {
      throw Error(Errc::MalformedTable, "'sample_id' may only appear first");
    } else {
      feature_cols.push_back(c);
      table.feature_names.push_back(name);
    }
  }
  if (expect_labels && !label_col) throw Error(Errc::MissingColumn, "expected column 'label'");
  if ((expect_survival || time_col || event_col) && !time_col) {
    throw Error(Errc::MissingColumn, "expected column 'time'");
  }
  if ((expect_survival || time_col || event_col) && !event_col) {
    throw Error(Errc::MissingColumn, "expected column 'event'");
  }
  if (feature_cols.empty()) throw Error(Errc::EmptyTable, "no feature columns");

  std::vector<std::vector<double>> rows;
  std::vector<OutcomeLabel> labels;
  std::vector<SurvivalRecord> survival;
  std::unordered_map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto cells = split_line(body);
    const std::size_t r = rows.size();
    if (cells.size() != header.size()) {
      throw Error(Errc::MalformedTable, "row " + std::to_string(r + 1) + " has " +
                                            std::to_string(cells.size()) + " cells, header has " +
                                            std::to_string(header.size()));
    }
    std::string id(trim(cells[0]));
    if (id.empty()) throw Error(Errc::MalformedTable, "row " + std::to_string(r + 1) + " has an empty sample_id");
    if (auto [it, inserted] = seen.emplace(id, r); !inserted) {
      throw Error(Errc::DuplicateId, "sample_id '" + id + "' appears on rows " +
                                         std::to_string(it->second + 1) + " and " + std::to_string(r + 1));
    }
    table.sample_ids.push_back(std::move(id));

    std::vector<double> values;
    values.reserve(feature_cols.size());
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const auto c = feature_cols[k];
      values.push_back(parse_number(trim(cells[c]), r, header[c]));
    }
    rows.push_back(std::move(values));

    if (label_col) {
      const auto cell = trim(cells[*label_col]);
      if (cell == "1") {
        labels.push_back(OutcomeLabel::Alive);
      } else if (cell == "2") {
        labels.push_back(OutcomeLabel::Deceased);
      } else {
        throw Error(Errc::InvalidLabel, where(r, kLabelColumn) + " must be 1 or 2, got '" + std::string(cell) + "'");
      }
    }
    if (time_col) {
      SurvivalRecord rec;
      rec.time = parse_number(trim(cells[*time_col]), r, kTimeColumn);
      if (rec.time <= 0.0) {
        throw Error(Errc::InvalidSurvival, where(r, kTimeColumn) + " must be > 0, got " + std::string(trim(cells[*time_col])));
      }
      const auto ev = trim(cells[*event_col]);
      if (ev == "1") {
        rec.event = true;
      } else if (ev == "0") {
        rec.event = false;
      } else {
        throw Error(Errc::InvalidSurvival, where(r, kEventColumn) + " must be 0 or 1, got '" + std::string(ev) + "'");
      }
      survival.push_back(rec);
    }
  }
  if (rows.empty()) throw Error(Errc::EmptyTable, "table has a header but no data rows");

  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feature_cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  if (label_col) table.labels = std::move(labels);
  if (time_col) table.survival = std::move(survival);
  return table;
}

FeatureTable load_feature_table(const std::filesystem::path& path, bool expect_labels, bool expect_survival) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path.string() + "'");
  return parse_feature_table(in, expect_labels, expect_survival);
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw Error(Errc::IoError, "cannot format number");
  return std::string(buf, ptr);
}

void write_feature_table(const FeatureTable& t, std::ostream& out) {
  out << kIdColumn;
  for (const auto& name : t.feature_names) out << ',' << name;
  if (t.labels) out << ',' << kLabelColumn;
  if (t.survival) out << ',' << kTimeColumn << ',' << kEventColumn;
  out << '\n';
  for (std::size_t i = 0; i < t.rows(); ++i) {
    out << t.sample_ids[i];
    for (std::size_t j = 0; j < t.cols(); ++j) {
      out << ',' << format_number(t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    if (t.labels) out << ',' << class_code((*t.labels)[i]);
    if (t.survival) {
      out << ',' << format_number((*t.survival)[i].time) << ',' << ((*t.survival)[i].event ? '1' : '0');
    }
    out << '\n';
  }
}

void save_feature_table(const FeatureTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
  write_feature_table(table, out);
  if (!out) throw Error(Errc::IoError, "write failed for '" + path.string() + "'");
}

void SyntheticSpec::validate() const {
  if (n_labeled == 0) throw Error(Errc::InvalidSpec, "n_labeled must be positive");
  if (n_features == 0) throw Error(Errc::InvalidSpec, "n_features must be positive");
  if (noise_features > n_features) throw Error(Errc::InvalidSpec, "noise_features exceeds n_features");
  if (!(class_separation >= 0.0) || !std::isfinite(class_separation)) {
    throw Error(Errc::InvalidSpec, "class_separation must be finite and >= 0");
  }
  if (!std::isfinite(survival_effect)) throw Error(Errc::InvalidSpec, "survival_effect must be finite");
  if (!(censoring_rate >= 0.0 && censoring_rate < 1.0)) {
    throw Error(Errc::InvalidSpec, "censoring_rate must lie in [0, 1)");
  }
}

void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  j = nlohmann::json{{"n_labeled", s.n_labeled},
                     {"n_auxiliary", s.n_auxiliary},
                     {"n_features", s.n_features},
                     {"class_separation", s.class_separation},
                     {"noise_features", s.noise_features},
                     {"survival_effect", s.survival_effect},
                     {"censoring_rate", s.censoring_rate}};
}

void from_json(const nlohmann::json& j, SyntheticSpec& s) {
  static const std::set<std::string> kFields = {"n_labeled",      "n_auxiliary",     "n_features",
                                                "class_separation", "noise_features", "survival_effect",
                                                "censoring_rate"};
  if (!j.is_object()) throw Error(Errc::InvalidSpec, "synthetic spec must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kFields.count(key)) throw Error(Errc::InvalidSpec, "unknown field '" + key + "'");
  }
  for (const auto& key : kFields) {
    if (!j.contains(key)) throw Error(Errc::InvalidSpec, "missing field '" + key + "'");
  }
  auto count = [&](const char* key) -> std::size_t {
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw Error(Errc::InvalidSpec, std::string(key) + " must be a nonnegative integer");
    }
    return v.get<std::size_t>();
  };
  auto real = [&](const char* key) -> double {
    const auto& v = j.at(key);
    if (!v.is_number()) throw Error(Errc::InvalidSpec, std::string(key) + " must be a number");
    return v.get<double>();
  };
  s.n_labeled = count("n_labeled");
  s.n_auxiliary = count("n_auxiliary");
  s.n_features = count("n_features");
  s.class_separation = real("class_separation");
  s.noise_features = count("noise_features");
  s.survival_effect = real("survival_effect");
  s.censoring_rate = real("censoring_rate");
  s.validate();
}

double signal_score(const SyntheticSpec& spec, std::span<const double> row) {
  const std::size_t n_signal = spec.n_features - spec.noise_features;
  if (n_signal == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t j = 0; j < n_signal; ++j) sum += row[j];
  return sum / std::sqrt(static_cast<double>(n_signal));
}

namespace {

std::string padded_id(char prefix, std::size_t index, std::size_t total) {
  const std::size_t width = std::max<std::size_t>(4, std::to_string(total).size());
  std::string digits = std::to_string(index + 1);
  return std::string(1, prefix) + std::string(width - digits.size(), '0') + digits;
}

// Draws rows from the two-cluster mixture; returns hidden class per row.
std::vector<OutcomeLabel> draw_mixture(const SyntheticSpec& spec, std::size_t n, Rng& rng,
                                       Eigen::MatrixXd& values) {
  const std::size_t n_signal = spec.n_features - spec.noise_features;
  const double offset =
      n_signal == 0 ? 0.0 : spec.class_separation / (2.0 * std::sqrt(static_cast<double>(n_signal)));
  values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.n_features));
  std::vector<OutcomeLabel> hidden(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool positive = rng.bernoulli(0.5);
    hidden[i] = positive ? OutcomeLabel::Deceased : OutcomeLabel::Alive;
    const double mean = positive ? offset : -offset;
    for (std::size_t j = 0; j < spec.n_features; ++j) {
      const double mu = j < n_signal ? mean : 0.0;
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng.normal(mu, 1.0);
    }
  }
  return hidden;
}

// Rate of an independent exponential censoring clock whose expected
// censored fraction over the given event hazards equals `target`.
double censoring_hazard(const std::vector<double>& hazards, double target) {
  auto fraction = [&](double mu) {
    double f = 0.0;
    for (double h : hazards) f += mu / (mu + h);
    return f / static_cast<double>(hazards.size());
  };
  double lo = -60.0, hi = 60.0;  // log mu
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (fraction(std::exp(mid)) < target ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace

SyntheticCohort generate_synthetic_cohort(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  SyntheticCohort cohort;

  std::vector<std::string> names(spec.n_features);
  for (std::size_t j = 0; j < spec.n_features; ++j) {
    const std::string digits = std::to_string(j + 1);
    names[j] = "f" + std::string(digits.size() < 3 ? 3 - digits.size() : 0, '0') + digits;
  }

  {
    Rng rng(derive_seed(seed, {0}));
    auto& t = cohort.labeled;
    t.feature_names = names;
    t.labels = draw_mixture(spec, spec.n_labeled, rng, t.values);
    for (std::size_t i = 0; i < spec.n_labeled; ++i) t.sample_ids.push_back(padded_id('L', i, spec.n_labeled));
  }
  {
    Rng rng(derive_seed(seed, {1}));
    auto& t = cohort.auxiliary;
    t.feature_names = names;
    draw_mixture(spec, spec.n_auxiliary, rng, t.values);
    for (std::size_t i = 0; i < spec.n_auxiliary; ++i) t.sample_ids.push_back(padded_id('A', i, spec.n_auxiliary));
  }
  {
    Rng rng(derive_seed(seed, {2}));
    const auto& values = cohort.labeled.values;
    std::vector<double> hazards(spec.n_labeled);
    std::vector<double> row(spec.n_features);
    for (std::size_t i = 0; i < spec.n_labeled; ++i) {
      for (std::size_t j = 0; j < spec.n_features; ++j) {
        row[j] = values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
      hazards[i] = kBaselineHazard * std::exp(spec.survival_effect * signal_score(spec, row));
    }
    const double censor_rate = spec.censoring_rate > 0.0 ? censoring_hazard(hazards, spec.censoring_rate) : 0.0;
    std::vector<SurvivalRecord> records(spec.n_labeled);
    for (std::size_t i = 0; i < spec.n_labeled; ++i) {
      const double event_time = rng.exponential(hazards[i]);
      const double censor_time =
          censor_rate > 0.0 ? rng.exponential(censor_rate) : std::numeric_limits<double>::infinity();
      records[i].event = event_time <= censor_time;
      records[i].time = std::max(std::min(event_time, censor_time), std::numeric_limits<double>::min());
    }
    cohort.labeled.survival = std::move(records);
  }
  return cohort;
}

}  // namespace pseudosurv
