#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pfad/detectors.hpp"
#include "pfad/kernel_machine.hpp"

namespace pfad {

struct EnsembleSpec {
  std::string name;
  std::vector<DetectorKind> bases;
  double C = 10.0;
  double gamma = 10.0;
};

// HKAIP, HKGIP, HKLIP, HKLIF.
const std::vector<EnsembleSpec>& ensemble_presets();
std::optional<EnsembleSpec> find_preset(std::string_view name);
// Throws ConfigError on empty or repeated bases and non-positive C or gamma.
void validate_spec(const EnsembleSpec& spec);

struct EnsembleModel {
  EnsembleSpec spec;
  std::vector<DetectorModel> bases;
  Eigen::VectorXd norm_mean, norm_sd;  // validation statistics per base
  KernelMachine machine;
  double threshold = 0.0;

  Eigen::Index dimension() const { return bases.front().dimension(); }
  Eigen::VectorXd normalize(const Eigen::VectorXd& base_scores) const;
  double score(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd score_rows(const Eigen::MatrixXd& X) const;
  bool decide(const Eigen::Ref<const Eigen::VectorXd>& x) const { return is_anomalous(score(x), threshold); }
};

// |X| x |bases| matrix; column j holds the scores of base j.
Eigen::MatrixXd collect_base_scores(const std::vector<DetectorModel>& bases, const Eigen::MatrixXd& X);
Eigen::MatrixXd collect_base_scores(const std::vector<DetectorModel>& bases, const LabeledDataset& ds);

// Bases must match spec.bases in order. Validation needs both classes (FitError otherwise).
EnsembleModel fit_ensemble(const EnsembleSpec& spec, std::vector<DetectorModel> bases, const Eigen::MatrixXd& Xval,
                           const std::vector<bool>& is_attack, std::uint64_t seed = 42);
EnsembleModel fit_ensemble(const EnsembleSpec& spec, std::vector<DetectorModel> bases,
                           const LabeledDataset& validation, std::uint64_t seed = 42);

nlohmann::json ensemble_to_json(const EnsembleModel& model);
EnsembleModel ensemble_from_json(const nlohmann::json& j);
// One CBOR container holding the stacker and its base models.
void save_ensemble(const EnsembleModel& model, const std::string& path);
EnsembleModel load_ensemble(const std::string& path);

}  // namespace pfad
