#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pfad/traffic_model.hpp"

namespace pfad {

enum class DetectorKind { HBOS, COPOD, ECOD, FeatureBagging, kNN, LOF, IForest, LODA, INNE, PCA, ABOD, GMM };

inline constexpr std::array<DetectorKind, 12> kAllDetectors = {
    DetectorKind::HBOS, DetectorKind::COPOD,   DetectorKind::ECOD, DetectorKind::FeatureBagging,
    DetectorKind::kNN,  DetectorKind::LOF,     DetectorKind::IForest, DetectorKind::LODA,
    DetectorKind::INNE, DetectorKind::PCA,     DetectorKind::ABOD, DetectorKind::GMM};

std::string_view detector_name(DetectorKind k);
// Case-insensitive.
std::optional<DetectorKind> parse_detector(std::string_view s);

using Hyperparameters = std::map<std::string, double>;

struct DetectorConfig {
  DetectorKind kind = DetectorKind::HBOS;
  Hyperparameters hyper;
  double contamination = 0.01;
  std::uint64_t seed = 42;
};

// Per-kind defaults merged with any overrides; unknown names throw ConfigError.
DetectorConfig make_config(DetectorKind kind, const Hyperparameters& overrides = {},
                           double contamination = 0.01, std::uint64_t seed = 42);
const Hyperparameters& default_hyperparameters(DetectorKind kind);
// Throws ConfigError on unknown or out-of-range hyperparameters and on contamination outside (0, 0.5).
void validate_config(const DetectorConfig& config);
// Smallest training set the kind can be fitted on.
std::size_t minimum_rows(const DetectorConfig& config);

// Fitted state of one detector kind, operating on the dense numeric representation.
class ScoringModel {
 public:
  virtual ~ScoringModel() = default;
  virtual Eigen::Index dimension() const = 0;
  virtual double score(const Eigen::Ref<const Eigen::VectorXd>& x) const = 0;
  // Row-wise scores; neighbour methods override this with a batched search.
  virtual Eigen::VectorXd score_rows(const Eigen::MatrixXd& X) const;
  // Scores of the training rows as seen at fit time. Neighbour methods leave
  // each row out of its own neighbourhood.
  virtual const Eigen::VectorXd& training_scores() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

struct ScoreStats {
  double min = 0, max = 0, mean = 0, sd = 0;
};

ScoreStats score_stats(const Eigen::VectorXd& scores);

struct DetectorModel {
  DetectorConfig config;
  std::shared_ptr<const ScoringModel> state;
  double threshold = 0.0;
  ScoreStats train_stats;

  Eigen::Index dimension() const { return state->dimension(); }
  // Throws SchemaError on a dimension mismatch.
  double score(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd score_rows(const Eigen::MatrixXd& X) const;
  bool decide(const Eigen::Ref<const Eigen::VectorXd>& x) const { return score(x) > threshold; }
};

// Strict decision rule shared by detectors and ensembles.
inline bool is_anomalous(double score, double threshold) { return score > threshold; }

// (1 - contamination) quantile, linear interpolation.
double calibrate_threshold(const Eigen::VectorXd& train_scores, double contamination);

// Fits on X (rows = training vectors). Throws FitError when there are too few rows.
DetectorModel fit_matrix(const DetectorConfig& config, const Eigen::MatrixXd& X);
// Benign-only check (GT4) then fit on the dataset's design matrix.
DetectorModel fit(const DetectorConfig& config, const LabeledDataset& train);

struct GridPoint {
  Hyperparameters hyper;
  double f1 = 0.0;
  std::string error;  // non-empty when the fit failed
};

struct GridResult {
  DetectorConfig best;
  std::vector<GridPoint> log;
};

// Cartesian product over the named values, in name order. Each point is fitted
// on train and scored by F1 on validation; ties go to the lexicographically
// smaller hyperparameter tuple.
GridResult grid_search(const DetectorConfig& base, const std::map<std::string, std::vector<double>>& grid,
                       const LabeledDataset& train, const LabeledDataset& validation);

nlohmann::json config_to_json(const DetectorConfig& config);
DetectorConfig config_from_json(const nlohmann::json& j);
nlohmann::json detector_to_json(const DetectorModel& model);
DetectorModel detector_from_json(const nlohmann::json& j);
// CBOR container on disk.
void save_detector(const DetectorModel& model, const std::string& path);
DetectorModel load_detector(const std::string& path);

}  // namespace pfad
