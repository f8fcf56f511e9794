#include "marketlab/report.hpp"

#include <charconv>
#include <cmath>

#include <json.hpp>

namespace marketlab {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

nlohmann::json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_stat_csv(std::ostream& out, const std::vector<StatRow>& rows) {
  out << kStatCsvHeader << '\n';
  for (const auto& r : rows) {
    out << csv_field(r.scenario) << ',' << csv_field(r.point) << ',' << csv_field(r.estimator) << ','
        << r.source << ',' << format_number(r.mean) << ',' << format_number(r.bias) << ','
        << format_number(r.se) << ',' << format_number(r.rmse) << ',' << format_number(r.ci_lo)
        << ',' << format_number(r.ci_hi) << ',' << format_number(r.gte_true) << ',' << r.reps
        << ',' << r.seed << '\n';
  }
}

void write_stat_json(std::ostream& out, const std::vector<StatRow>& rows,
                     const std::vector<PointError>& errors) {
  using nlohmann::json;
  json doc;
  doc["meta"] = {{"se", "standard deviation of the estimator across replications"},
                 {"ci", "percentile bootstrap interval of the bias"}};
  json arr = json::array();
  for (const auto& r : rows) {
    json row = {{"scenario", r.scenario}, {"point", r.point},
                {"estimator", r.estimator}, {"source", r.source},
                {"mean", number_or_null(r.mean)}, {"bias", number_or_null(r.bias)},
                {"se", number_or_null(r.se)}, {"rmse", number_or_null(r.rmse)},
                {"ci_lo", number_or_null(r.ci_lo)}, {"ci_hi", number_or_null(r.ci_hi)},
                {"gte_true", number_or_null(r.gte_true)}, {"reps", r.reps},
                {"seed", r.seed}};
    if (r.se_ci) row["se_ci"] = {number_or_null(r.se_ci->lo), number_or_null(r.se_ci->hi)};
    if (r.rmse_ci) row["rmse_ci"] = {number_or_null(r.rmse_ci->lo), number_or_null(r.rmse_ci->hi)};
    arr.push_back(std::move(row));
  }
  doc["rows"] = std::move(arr);
  json errs = json::array();
  for (const auto& e : errors) errs.push_back({{"point", e.point}, {"message", e.message}});
  doc["errors"] = std::move(errs);
  out << doc.dump(2) << '\n';
}

}  // namespace marketlab
