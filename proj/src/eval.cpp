#include "pfad/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pfad/errors.hpp"

namespace pfad {

namespace {

double round4(double v) { return std::round(v * 1e4) / 1e4 + 0.0; }

nlohmann::ordered_json number_or_null(std::optional<double> v) {
  if (!v || std::isnan(*v)) return nullptr;
  return round4(*v);
}

std::optional<double> from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string percent(std::optional<double> v) {
  if (!v || std::isnan(*v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", *v * 100.0 + 0.0);
  return buf;
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

}  // namespace

std::vector<bool> attack_mask(const std::vector<ClassLabel>& labels) {
  std::vector<bool> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = is_attack(labels[i]);
  return out;
}

ThresholdMetrics threshold_metrics(const Eigen::VectorXd& scores, const std::vector<bool>& is_attack, double tau) {
  if (static_cast<std::size_t>(scores.size()) != is_attack.size())
    throw MetricError("score and label counts differ");
  ThresholdMetrics m;
  auto& c = m.counts;
  for (std::size_t i = 0; i < is_attack.size(); ++i) {
    const bool flagged = scores(static_cast<Eigen::Index>(i)) > tau;
    if (is_attack[i]) (flagged ? c.tp : c.fn)++;
    else (flagged ? c.fp : c.tn)++;
  }
  m.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  m.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  m.f1 = c.tp ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

double auc(const Eigen::VectorXd& scores, const std::vector<bool>& is_attack) {
  if (static_cast<std::size_t>(scores.size()) != is_attack.size()) throw MetricError("score and label counts differ");
  const auto n = is_attack.size();
  const auto pos = static_cast<double>(std::count(is_attack.begin(), is_attack.end(), true));
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0 || neg == 0) throw MetricError("AUC needs both benign and attack rows");
  for (Eigen::Index i = 0; i < scores.size(); ++i)
    if (std::isnan(scores(i))) throw MetricError("AUC input contains NaN scores");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores(static_cast<Eigen::Index>(a)) < scores(static_cast<Eigen::Index>(b));
  });
  // Sum of midranks of the attack rows (Mann-Whitney U).
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t k = i;
    while (k + 1 < n && scores(static_cast<Eigen::Index>(order[k + 1])) == scores(static_cast<Eigen::Index>(order[i]))) ++k;
    const double mid = (static_cast<double>(i) + static_cast<double>(k)) / 2.0 + 1.0;
    for (std::size_t r = i; r <= k; ++r)
      if (is_attack[order[r]]) rank_sum += mid;
    i = k + 1;
  }
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

DetectionRow detection_row(const std::string& model, bool scaled, const std::vector<bool>& flagged,
                           const std::vector<ClassLabel>& labels) {
  if (flagged.size() != labels.size()) throw MetricError("decision and label counts differ");
  DetectionRow row{model, scaled, {}};
  std::array<std::size_t, 6> hits{}, totals{};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    ++totals[c];
    if (flagged[i]) ++hits[c];
  }
  for (std::size_t c = 0; c < 6; ++c)
    if (totals[c]) row.rate[c] = static_cast<double>(hits[c]) / static_cast<double>(totals[c]);
  return row;
}

std::vector<EvasionRow> evasion_table(const std::vector<OutcomeSummary>& outcomes,
                                      const std::vector<EvasionRow>& expected_groups) {
  std::vector<EvasionRow> rows;
  auto find = [&](const std::string& model, const std::string& alg, bool scaled) -> EvasionRow& {
    for (auto& r : rows)
      if (r.model == model && r.algorithm == alg && r.scaled == scaled) return r;
    rows.push_back(EvasionRow{model, alg, scaled, 0, 0});
    return rows.back();
  };
  for (const auto& g : expected_groups) find(g.model, g.algorithm, g.scaled);
  for (const auto& o : outcomes) {
    auto& r = find(o.model, o.algorithm, o.scaled);
    ++r.attempted;
    if (o.evaded) ++r.evaded;
  }
  return rows;
}

std::string format_fixed(std::optional<double> v, int decimals) {
  if (!v || std::isnan(*v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, *v + 0.0);
  std::string s = buf;
  // Avoid "-0.0000" for tiny negatives.
  if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

nlohmann::ordered_json metrics_json(const std::vector<MetricsRow>& rows) {
  nlohmann::ordered_json out;
  out["version"] = 1;
  out["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["model"] = r.model;
    j["scaled"] = r.scaled;
    j["auc"] = number_or_null(r.auc);
    j["precision"] = number_or_null(r.precision);
    j["recall"] = number_or_null(r.recall);
    j["f1"] = number_or_null(r.f1);
    out["rows"].push_back(j);
  }
  return out;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream s;
  s << "model,scaled,auc,precision,recall,f1\n";
  for (const auto& r : rows)
    s << r.model << ',' << (r.scaled ? "true" : "false") << ',' << format_fixed(r.auc) << ','
      << format_fixed(r.precision) << ',' << format_fixed(r.recall) << ',' << format_fixed(r.f1) << '\n';
  return s.str();
}

std::string detection_csv(const std::vector<DetectionRow>& rows) {
  std::ostringstream s;
  s << "model,scaled,Normal (FPR)";
  for (std::size_t c = 1; c < 6; ++c) s << ',' << class_name(kAllClasses[c]);
  s << '\n';
  for (const auto& r : rows) {
    s << r.model << ',' << (r.scaled ? "true" : "false");
    for (const auto& v : r.rate) s << ',' << format_fixed(v);
    s << '\n';
  }
  return s.str();
}

nlohmann::ordered_json detection_json(const std::vector<DetectionRow>& rows) {
  nlohmann::ordered_json out;
  out["version"] = 1;
  out["normal_column"] = "false positive rate";
  out["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["model"] = r.model;
    j["scaled"] = r.scaled;
    nlohmann::ordered_json rates;
    for (std::size_t c = 0; c < 6; ++c) rates[std::string(class_name(kAllClasses[c]))] = number_or_null(r.rate[c]);
    j["rates"] = rates;
    out["rows"].push_back(j);
  }
  return out;
}

nlohmann::ordered_json evasion_json(const std::vector<EvasionRow>& rows) {
  nlohmann::ordered_json out;
  out["version"] = 1;
  out["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["model"] = r.model;
    j["algorithm"] = r.algorithm;
    j["scaled"] = r.scaled;
    j["attempted"] = r.attempted;
    j["evaded"] = r.evaded;
    j["evasion_rate"] = number_or_null(r.rate());
    out["rows"].push_back(j);
  }
  return out;
}

std::string evasion_csv(const std::vector<EvasionRow>& rows) {
  std::ostringstream s;
  s << "model,algorithm,scaled,attempted,evaded,evasion_rate\n";
  for (const auto& r : rows)
    s << r.model << ',' << r.algorithm << ',' << (r.scaled ? "true" : "false") << ',' << r.attempted << ','
      << r.evaded << ',' << format_fixed(r.rate()) << '\n';
  return s.str();
}

void emit_report(const Report& report, const std::string& dir, ReportFormat format) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create report directory " + dir + ": " + ec.message());
  const bool json = format != ReportFormat::csv;
  const bool csv = format != ReportFormat::json;
  const fs::path d(dir);
  if (!report.metrics.empty()) {
    if (json) write_file(d / "metrics.json", metrics_json(report.metrics).dump(2) + "\n");
    if (csv) write_file(d / "metrics.csv", metrics_csv(report.metrics));
  }
  if (!report.detection.empty()) {
    if (json) write_file(d / "detection_matrix.json", detection_json(report.detection).dump(2) + "\n");
    if (csv) write_file(d / "detection_matrix.csv", detection_csv(report.detection));
  }
  if (!report.evasion.empty()) {
    if (json) write_file(d / "evasion.json", evasion_json(report.evasion).dump(2) + "\n");
    if (csv) write_file(d / "evasion.csv", evasion_csv(report.evasion));
  }
}

std::string render_tables(const Report& report) {
  std::ostringstream s;
  if (!report.metrics.empty()) {
    s << "Overall performance (test split)\n";
    s << pad("model", 16) << pad("scaler", 8) << pad("AUC", 8) << pad("Prec", 8) << pad("Rec", 8) << "F1\n";
    for (const auto& r : report.metrics)
      s << pad(r.model, 16) << pad(r.scaled ? "yes" : "no", 8) << pad(format_fixed(r.auc, 3), 8)
        << pad(format_fixed(r.precision, 3), 8) << pad(format_fixed(r.recall, 3), 8) << format_fixed(r.f1, 3) << '\n';
    s << '\n';
  }
  if (!report.detection.empty()) {
    s << "Detection rate per class (Normal = false-positive rate)\n";
    s << pad("model", 16) << pad("scaler", 8);
    for (auto c : kAllClasses) s << pad(std::string(class_name(c)), 17);
    s << '\n';
    for (const auto& r : report.detection) {
      s << pad(r.model, 16) << pad(r.scaled ? "yes" : "no", 8);
      for (const auto& v : r.rate) s << pad(percent(v), 17);
      s << '\n';
    }
    s << '\n';
  }
  if (!report.evasion.empty()) {
    s << "Evasion rate (denominator: initially detected samples)\n";
    s << pad("model", 16) << pad("scaler", 8) << pad("algorithm", 10) << pad("attempted", 11) << "rate\n";
    for (const auto& r : report.evasion)
      s << pad(r.model, 16) << pad(r.scaled ? "yes" : "no", 8) << pad(r.algorithm, 10)
        << pad(std::to_string(r.attempted), 11) << percent(r.rate()) << '\n';
  }
  return s.str();
}

Report load_report(const std::string& dir) {
  namespace fs = std::filesystem;
  Report r;
  auto load = [&](const char* name) -> std::optional<nlohmann::json> {
    const fs::path p = fs::path(dir) / name;
    if (!fs::exists(p)) return std::nullopt;
    std::ifstream in(p);
    if (!in) throw IoError("cannot read " + p.string());
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(p.string() + ": " + e.what());
    }
  };
  if (auto j = load("metrics.json"))
    for (const auto& row : j->at("rows"))
      r.metrics.push_back({row.at("model").get<std::string>(), row.at("scaled").get<bool>(),
                           from_json(row.at("auc")).value_or(NAN), from_json(row.at("precision")).value_or(NAN),
                           from_json(row.at("recall")).value_or(NAN), from_json(row.at("f1")).value_or(NAN)});
  if (auto j = load("detection_matrix.json"))
    for (const auto& row : j->at("rows")) {
      DetectionRow d{row.at("model").get<std::string>(), row.at("scaled").get<bool>(), {}};
      for (std::size_t c = 0; c < 6; ++c) d.rate[c] = from_json(row.at("rates").at(std::string(class_name(kAllClasses[c]))));
      r.detection.push_back(d);
    }
  if (auto j = load("evasion.json"))
    for (const auto& row : j->at("rows"))
      r.evasion.push_back({row.at("model").get<std::string>(), row.at("algorithm").get<std::string>(),
                           row.at("scaled").get<bool>(), row.at("attempted").get<std::size_t>(),
                           row.at("evaded").get<std::size_t>()});
  return r;
}

}  // namespace pfad
