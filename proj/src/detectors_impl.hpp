#pragma once

#include <memory>

#include "json_eigen.hpp"
#include "pfad/detectors.hpp"
#include "pfad/neighbors.hpp"

namespace pfad::detail {

using ModelPtr = std::unique_ptr<ScoringModel>;

inline int hyper_int(const Hyperparameters& h, const char* name) {
  return static_cast<int>(h.at(name));
}

ModelPtr fit_hbos(const Hyperparameters& h, const Eigen::MatrixXd& X);
ModelPtr fit_copod(const Eigen::MatrixXd& X);
ModelPtr fit_ecod(const Eigen::MatrixXd& X);
ModelPtr load_hbos(const nlohmann::json& j);
ModelPtr load_copod(const nlohmann::json& j);
ModelPtr load_ecod(const nlohmann::json& j);

ModelPtr fit_knn(const Hyperparameters& h, const Eigen::MatrixXd& X);
ModelPtr fit_lof(const Hyperparameters& h, const Eigen::MatrixXd& X);
ModelPtr fit_iforest(const Hyperparameters& h, const Eigen::MatrixXd& X, std::uint64_t seed);
ModelPtr fit_feature_bagging(const Hyperparameters& h, const Eigen::MatrixXd& X, std::uint64_t seed);
ModelPtr fit_loda(const Hyperparameters& h, const Eigen::MatrixXd& X, std::uint64_t seed);
ModelPtr fit_inne(const Hyperparameters& h, const Eigen::MatrixXd& X, std::uint64_t seed);
ModelPtr load_knn(const nlohmann::json& j);
ModelPtr load_lof(const nlohmann::json& j);
ModelPtr load_iforest(const nlohmann::json& j);
ModelPtr load_feature_bagging(const nlohmann::json& j);
ModelPtr load_loda(const nlohmann::json& j);
ModelPtr load_inne(const nlohmann::json& j);

ModelPtr fit_pca(const Hyperparameters& h, const Eigen::MatrixXd& X);
ModelPtr fit_abod(const Hyperparameters& h, const Eigen::MatrixXd& X);
ModelPtr fit_gmm(const Hyperparameters& h, const Eigen::MatrixXd& X, std::uint64_t seed);
ModelPtr load_pca(const nlohmann::json& j);
ModelPtr load_abod(const nlohmann::json& j);
ModelPtr load_gmm(const nlohmann::json& j);

}  // namespace pfad::detail
