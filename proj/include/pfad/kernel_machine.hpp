#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "json.hpp"

namespace pfad {

inline double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v,
                         double gamma) {
  return std::exp(-gamma * (u - v).squaredNorm());
}

struct SvcOptions {
  double C = 10.0;
  double gamma = 10.0;
  double tol = 1e-3;
  int max_passes = 100;
  std::uint64_t seed = 42;
};

// Hinge-loss RBF classifier. The bias is absorbed into the kernel (K + 1), so
// margin(u) = sum_i coef_i K(s_i, u) + bias with bias = sum_i coef_i.
struct KernelMachine {
  double gamma = 1.0;
  Eigen::MatrixXd support;  // rows are support vectors
  Eigen::VectorXd coef;     // alpha_i * y_i
  double bias = 0.0;
  int passes = 0;
  bool converged = false;

  double margin(const Eigen::Ref<const Eigen::VectorXd>& u) const;
};

// Dual coordinate descent over 0 <= alpha <= C, visiting coordinates in a
// seeded random order each pass; stops when the largest projected gradient of
// a pass is below tol. y holds +1 / -1.
KernelMachine fit_svc(const Eigen::MatrixXd& U, const std::vector<int>& y, const SvcOptions& options);

nlohmann::json kernel_machine_to_json(const KernelMachine& m);
KernelMachine kernel_machine_from_json(const nlohmann::json& j);

}  // namespace pfad
