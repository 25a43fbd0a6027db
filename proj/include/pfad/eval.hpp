#pragma once

#include <Eigen/Core>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pfad/traffic_model.hpp"

namespace pfad {

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct ThresholdMetrics {
  double precision = 0, recall = 0, f1 = 0;
  Confusion counts;
};

// true for every attack class.
std::vector<bool> attack_mask(const std::vector<ClassLabel>& labels);

// Strict score > tau; zero-denominator ratios are 0.
ThresholdMetrics threshold_metrics(const Eigen::VectorXd& scores, const std::vector<bool>& is_attack, double tau);

// Rank statistic with half credit for ties. Throws MetricError unless both classes are present.
double auc(const Eigen::VectorXd& scores, const std::vector<bool>& is_attack);

struct MetricsRow {
  std::string model;
  bool scaled = true;
  double auc = 0, precision = 0, recall = 0, f1 = 0;
};

// Per model: flagged fraction for each of the six classes; the Normal entry
// is the false-positive rate. Classes absent from the data are nullopt.
struct DetectionRow {
  std::string model;
  bool scaled = true;
  std::array<std::optional<double>, 6> rate;
};

DetectionRow detection_row(const std::string& model, bool scaled, const std::vector<bool>& flagged,
                           const std::vector<ClassLabel>& labels);

struct EvasionRow {
  std::string model;
  std::string algorithm;
  bool scaled = true;
  std::size_t attempted = 0;
  std::size_t evaded = 0;
  std::optional<double> rate() const {
    if (attempted == 0) return std::nullopt;
    return static_cast<double>(evaded) / static_cast<double>(attempted);
  }
};

struct OutcomeSummary {
  std::string model;
  std::string algorithm;
  bool scaled = true;
  bool evaded = false;
};

// Grouped by (model, algorithm, scaled) in first-seen order of the sorted keys.
std::vector<EvasionRow> evasion_table(const std::vector<OutcomeSummary>& outcomes,
                                      const std::vector<EvasionRow>& expected_groups = {});

// Fixed four-decimal rendering; "n/a" for undefined values.
std::string format_fixed(std::optional<double> v, int decimals = 4);

struct Report {
  std::vector<MetricsRow> metrics;
  std::vector<DetectionRow> detection;
  std::vector<EvasionRow> evasion;
};

nlohmann::ordered_json metrics_json(const std::vector<MetricsRow>& rows);
std::string metrics_csv(const std::vector<MetricsRow>& rows);
std::string detection_csv(const std::vector<DetectionRow>& rows);
nlohmann::ordered_json detection_json(const std::vector<DetectionRow>& rows);
nlohmann::ordered_json evasion_json(const std::vector<EvasionRow>& rows);
std::string evasion_csv(const std::vector<EvasionRow>& rows);

enum class ReportFormat { json, csv, both };

// Writes metrics.{json,csv}, detection_matrix.{csv,json}, evasion.{json,csv}
// for the non-empty parts. Throws IoError on unwritable paths.
void emit_report(const Report& report, const std::string& dir, ReportFormat format = ReportFormat::both);

// Human-readable tables in the published layout: three-decimal metrics,
// percentages for detection and evasion rates.
std::string render_tables(const Report& report);

// Parses files written by emit_report (json variants).
Report load_report(const std::string& dir);

}  // namespace pfad
