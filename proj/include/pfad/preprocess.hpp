#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pfad/traffic_model.hpp"

namespace pfad {

struct DropEntry {
  std::string feature;
  std::string reason;  // "GT1", "GT2", "GT3" or "mapping"
  std::string detail;
  bool operator==(const DropEntry&) const = default;
};

struct PipelineOptions {
  bool scaling = true;
  // Appended to the built-in environment blocklist.
  std::vector<std::string> environment_patterns;
  // When set, only these input features are considered at all; the rest are
  // dropped with reason "mapping" before GT1.
  std::optional<std::vector<std::string>> field_mapping;
  int imputer_max_rounds = 10;
  double imputer_tol = 1e-3;
};

// Column selection in the input schema's order.
LabeledDataset select_columns(const LabeledDataset& ds, const std::vector<std::string>& names);

// Numerical features without a declared interval get [min, max] of the observed values.
FeatureSchema infer_domains(const FeatureSchema& schema, const LabeledDataset& train);

std::map<Protocol, std::size_t> protocol_counts(const FeatureSchema& schema);

LabeledDataset drop_environment_features(const LabeledDataset& ds, std::vector<DropEntry>* report,
                                         const std::vector<std::string>& extra_patterns = {});

// Row-level part of the control-plane filter: true for TCP/ICMP packets.
bool is_side_traffic(const FeatureSchema& schema, const FeatureVector& x);
LabeledDataset filter_control_plane(const LabeledDataset& ds, std::vector<DropEntry>* report,
                                    std::size_t* rows_removed = nullptr);

// Constant (MISSING counts as a value), all-missing, and exact-duplicate columns.
LabeledDataset drop_uninformative(const LabeledDataset& ds, std::vector<DropEntry>* report);

struct ImputerState {
  // Per categorical slot: fill code.
  std::vector<int> categorical_fill;
  // Per numerical slot: median fallback, standardisation used by the regressions,
  // and coefficients [intercept, one per numerical slot (own slot is 0)].
  Eigen::VectorXd median;
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
  Eigen::MatrixXd coef;
  // Observed training range; regression outputs are clamped into it.
  Eigen::VectorXd lo, hi;
  int max_rounds = 10;
  double tol = 1e-3;
  int rounds_used = 0;
};

ImputerState fit_imputer(const LabeledDataset& train, int max_rounds = 10, double tol = 1e-3);
void impute_vector(const ImputerState& state, FeatureVector& x);
LabeledDataset apply_imputer(const ImputerState& state, const LabeledDataset& ds);

struct ScalerState {
  Eigen::VectorXd median, q1, q3;  // per numerical slot
  bool degenerate(Eigen::Index j) const { return !(q3(j) > q1(j)); }
};

ScalerState fit_scaler(const LabeledDataset& train);
void scale_vector(const ScalerState& state, FeatureVector& x);
LabeledDataset apply_scaler(const ScalerState& state, const LabeledDataset& ds);

struct PipelineModel {
  FeatureSchema input_schema;   // with inferred domains
  FeatureSchema output_schema;
  std::vector<std::string> kept_features;
  std::vector<std::size_t> input_index;  // input-schema position of each kept feature
  std::vector<DropEntry> drop_report;
  ImputerState imputer;
  ScalerState scaler;
  bool scaling_enabled = true;
};

// train must be benign-only (GT4). Throws PipelineError when no feature survives.
PipelineModel fit_pipeline(const LabeledDataset& train, const PipelineOptions& options = {});

// Applies the frozen pipeline: column selection, side-traffic row filter,
// imputation, scaling.
LabeledDataset transform(const PipelineModel& model, const LabeledDataset& ds);
// Single raw vector (input schema) to the detector representation.
Eigen::VectorXd transform_dense(const PipelineModel& model, const FeatureVector& raw);

nlohmann::json pipeline_to_json(const PipelineModel& model);
PipelineModel pipeline_from_json(const nlohmann::json& j);
void save_pipeline(const PipelineModel& model, const std::string& path);
PipelineModel load_pipeline(const std::string& path);

}  // namespace pfad
