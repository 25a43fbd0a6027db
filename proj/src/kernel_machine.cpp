#include "pfad/kernel_machine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "json_eigen.hpp"
#include "pfad/errors.hpp"
#include "pfad/rng.hpp"

namespace pfad {

double KernelMachine::margin(const Eigen::Ref<const Eigen::VectorXd>& u) const {
  double m = bias;
  for (Eigen::Index i = 0; i < support.rows(); ++i)
    m += coef(i) * std::exp(-gamma * (support.row(i).transpose() - u).squaredNorm());
  return m;
}

KernelMachine fit_svc(const Eigen::MatrixXd& U, const std::vector<int>& y, const SvcOptions& o) {
  const Eigen::Index n = U.rows();
  if (static_cast<std::size_t>(n) != y.size()) throw FitError("label count does not match score rows");
  if (!(o.C > 0) || !(o.gamma > 0)) throw ConfigError("C and gamma must be positive");
  for (int v : y)
    if (v != 1 && v != -1) throw FitError("labels must be +1 or -1");

  const Eigen::VectorXd sq = U.rowwise().squaredNorm();
  // Rows of Q_ij = y_i y_j (K_ij + 1). Up to kFullRows points the whole
  // matrix is built once (about 0.5 GB at the cap); above that rows are built
  // on demand with a bounded cache.
  constexpr Eigen::Index kFullRows = 8192;
  auto build_row = [&](Eigen::Index i) {
    Eigen::VectorXd d2 = (sq.array() + sq(i)).matrix() - 2.0 * (U * U.row(i).transpose());
    Eigen::VectorXd row = ((-o.gamma * d2.cwiseMax(0.0)).array().exp() + 1.0).matrix();
    for (Eigen::Index j = 0; j < n; ++j) row(j) *= y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)];
    return row;
  };
  Eigen::MatrixXd full;
  if (n <= kFullRows) {
    full.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) full.col(i) = build_row(i);
  }
  std::unordered_map<Eigen::Index, Eigen::VectorXd> cache;
  auto q_row = [&](Eigen::Index i) -> Eigen::Ref<const Eigen::VectorXd> {
    if (n <= kFullRows) return full.col(i);
    auto it = cache.find(i);
    if (it != cache.end()) return it->second;
    if (cache.size() > 2048) cache.clear();
    return cache.emplace(i, build_row(i)).first->second;
  };

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);
  constexpr double kQii = 2.0;
  Rng rng(derive_seed(o.seed, "svc/order"));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  KernelMachine m;
  m.gamma = o.gamma;
  for (int pass = 0; pass < o.max_passes; ++pass) {
    rng.shuffle(order.begin(), order.end());
    double worst = 0.0;
    for (Eigen::Index i : order) {
      const double g = grad(i);
      double pg = g;
      if (alpha(i) <= 0.0) pg = std::min(g, 0.0);
      else if (alpha(i) >= o.C) pg = std::max(g, 0.0);
      worst = std::max(worst, std::abs(pg));
      if (pg == 0.0) continue;
      const double next = std::clamp(alpha(i) - g / kQii, 0.0, o.C);
      const double delta = next - alpha(i);
      if (delta == 0.0) continue;
      alpha(i) = next;
      grad += delta * q_row(i);
    }
    m.passes = pass + 1;
    if (worst < o.tol) {
      m.converged = true;
      break;
    }
  }

  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < n; ++i)
    if (alpha(i) > 0) sv.push_back(i);
  m.support = U(sv, Eigen::all);
  m.coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k)
    m.coef(static_cast<Eigen::Index>(k)) = alpha(sv[k]) * y[static_cast<std::size_t>(sv[k])];
  m.bias = m.coef.sum();
  return m;
}

nlohmann::json kernel_machine_to_json(const KernelMachine& m) {
  return {{"gamma", m.gamma},
          {"support", detail::matrix_json(m.support)},
          {"coef", detail::vector_json(m.coef)},
          {"bias", m.bias},
          {"passes", m.passes},
          {"converged", m.converged}};
}

KernelMachine kernel_machine_from_json(const nlohmann::json& j) {
  KernelMachine m;
  m.gamma = j.at("gamma").get<double>();
  m.support = detail::matrix_from(j.at("support"));
  m.coef = detail::vector_from(j.at("coef"));
  m.bias = j.at("bias").get<double>();
  m.passes = j.value("passes", 0);
  m.converged = j.value("converged", false);
  return m;
}

}  // namespace pfad
