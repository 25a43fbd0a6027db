#pragma once

#include <Eigen/Core>

#include "json.hpp"
#include "pfad/errors.hpp"

namespace pfad::detail {

inline nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Eigen::VectorXd vector_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json index_json(const std::vector<int>& v) { return nlohmann::json(v); }

// Row-major flat storage.
inline nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  std::vector<double> flat(static_cast<std::size_t>(m.size()));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat[k++] = m(r, c);
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

inline Eigen::MatrixXd matrix_from(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto flat = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols) throw SchemaError("matrix payload size mismatch");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[k++];
  return m;
}

}  // namespace pfad::detail
