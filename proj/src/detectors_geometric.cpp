#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "detectors_impl.hpp"
#include "pfad/rng.hpp"

namespace pfad::detail {
namespace {

// Squared reconstruction error after projecting onto the leading components.
class Pca final : public ScoringModel {
 public:
  Pca(Eigen::VectorXd mean, Eigen::MatrixXd components) : mean_(std::move(mean)), components_(std::move(components)) {}

  static ModelPtr fit(const Hyperparameters& h, const Eigen::MatrixXd& X) {
    const double fraction = h.at("variance_fraction");
    const Eigen::VectorXd mean = X.colwise().mean();
    const Eigen::MatrixXd Xc = X.rowwise() - mean.transpose();
    const Eigen::MatrixXd cov = Xc.transpose() * Xc / static_cast<double>(X.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::Index d = X.cols();
    Eigen::VectorXd values = eig.eigenvalues().reverse().cwiseMax(0.0);
    const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
    const double total = values.sum();
    Eigen::Index m = 0;
    if (total > 0) {
      double cum = 0.0;
      while (m < d && cum < fraction * total * (1.0 - 1e-12)) cum += values(m++);
    }
    auto model = std::make_unique<Pca>(mean, vectors.leftCols(m));
    model->train_ = model->score_rows(X);
    return model;
  }

  static ModelPtr load(const nlohmann::json& j) {
    auto model = std::make_unique<Pca>(vector_from(j.at("mean")), matrix_from(j.at("components")));
    model->train_ = vector_from(j.at("train_scores"));
    return model;
  }

  Eigen::Index dimension() const override { return mean_.size(); }

  double score(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    const Eigen::VectorXd c = x - mean_;
    return (c - components_ * (components_.transpose() * c)).squaredNorm();
  }

  Eigen::VectorXd score_rows(const Eigen::MatrixXd& X) const override {
    const Eigen::MatrixXd C = X.rowwise() - mean_.transpose();
    return (C - (C * components_) * components_.transpose()).rowwise().squaredNorm();
  }

  const Eigen::VectorXd& training_scores() const override { return train_; }

  nlohmann::json to_json() const override {
    return {{"mean", vector_json(mean_)}, {"components", matrix_json(components_)}, {"train_scores", vector_json(train_)}};
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd components_;
  Eigen::VectorXd train_;
};

// Fast angle-based outlier factor over the k nearest training points.
// Neighbours coinciding with the query carry no angle and are skipped; a
// query without any usable pair gets the least anomalous training score.
class Abod final : public ScoringModel {
 public:
  Abod(Eigen::MatrixXd points, int k, double fallback) : index_(std::move(points)), k_(k), fallback_(fallback) {}

  static ModelPtr fit(const Hyperparameters& h, const Eigen::MatrixXd& X) {
    auto model = std::make_unique<Abod>(X, hyper_int(h, "k"), 0.0);
    const Neighbors nb = model->index_.query_self(model->k_);
    Eigen::VectorXd raw = model->raw_scores(X, nb);
    double fallback = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < raw.size(); ++i)
      if (!std::isnan(raw(i))) fallback = std::min(fallback, raw(i));
    model->fallback_ = std::isfinite(fallback) ? fallback : 0.0;
    model->train_ = raw.unaryExpr([&](double v) { return std::isnan(v) ? model->fallback_ : v; });
    return model;
  }

  static ModelPtr load(const nlohmann::json& j) {
    auto model = std::make_unique<Abod>(matrix_from(j.at("points")), j.at("k").get<int>(), j.at("fallback").get<double>());
    model->train_ = vector_from(j.at("train_scores"));
    return model;
  }

  Eigen::Index dimension() const override { return index_.points().cols(); }
  double score(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    return score_rows(Eigen::MatrixXd(x.transpose()))(0);
  }

  Eigen::VectorXd score_rows(const Eigen::MatrixXd& X) const override {
    Eigen::VectorXd raw = raw_scores(X, index_.query(X, k_));
    return raw.unaryExpr([&](double v) { return std::isnan(v) ? fallback_ : v; });
  }

  const Eigen::VectorXd& training_scores() const override { return train_; }

  nlohmann::json to_json() const override {
    return {{"points", matrix_json(index_.points())}, {"k", k_}, {"fallback", fallback_},
            {"train_scores", vector_json(train_)}};
  }

 private:
  // NaN marks rows without a usable neighbour pair.
  Eigen::VectorXd raw_scores(const Eigen::MatrixXd& X, const Neighbors& nb) const {
    Eigen::VectorXd out(X.rows());
    std::vector<double> terms;
    Eigen::MatrixXd diff(k_, X.cols());
    Eigen::VectorXd sq(k_);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      for (int c = 0; c < k_; ++c) {
        diff.row(c) = index_.points().row(nb.index(i, c)) - X.row(i);
        sq(c) = diff.row(c).squaredNorm();
      }
      terms.clear();
      for (int a = 0; a < k_; ++a) {
        if (sq(a) <= 0) continue;
        for (int b = a + 1; b < k_; ++b) {
          if (sq(b) <= 0) continue;
          terms.push_back(diff.row(a).dot(diff.row(b)) / (sq(a) * sq(b)));
        }
      }
      if (terms.empty()) {
        out(i) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      double mean = 0.0;
      for (double t : terms) mean += t;
      mean /= static_cast<double>(terms.size());
      double var = 0.0;
      for (double t : terms) var += (t - mean) * (t - mean);
      var /= static_cast<double>(terms.size());
      out(i) = -std::log(var + 1e-12);
    }
    return out;
  }

  NeighborIndex index_;
  int k_;
  double fallback_;
  Eigen::VectorXd train_;
};

// Full-covariance Gaussian mixture; negative log-likelihood as score.
class Gmm final : public ScoringModel {
 public:
  struct Component {
    double log_weight = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd chol;  // lower Cholesky factor of the covariance
    double log_det = 0.0;
  };

  explicit Gmm(std::vector<Component> comps) : comps_(std::move(comps)) {}

  static ModelPtr fit(const Hyperparameters& h, const Eigen::MatrixXd& X, std::uint64_t seed) {
    const int K = hyper_int(h, "components");
    const int max_iter = hyper_int(h, "max_iter");
    const double tol = h.at("tol");
    const Eigen::Index n = X.rows(), d = X.cols();
    Rng rng(derive_seed(seed, "gmm/init"));

    // k-means++ seeding followed by Lloyd iterations.
    Eigen::MatrixXd centers(K, d);
    centers.row(0) = X.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
    Eigen::VectorXd d2 = (X.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < K; ++c) {
      const double total = d2.sum();
      Eigen::Index pick = 0;
      if (total > 0) {
        std::vector<double> w(d2.data(), d2.data() + n);
        pick = static_cast<Eigen::Index>(rng.weighted(w));
      } else {
        pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
      }
      centers.row(c) = X.row(pick);
      d2 = d2.cwiseMin((X.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
    std::vector<int> assign(static_cast<std::size_t>(n), 0);
    for (int it = 0; it < 20; ++it) {
      bool changed = false;
      const Eigen::MatrixXd D = (-2.0 * X * centers.transpose()).rowwise() + centers.rowwise().squaredNorm().transpose();
      for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index best;
        D.row(i).minCoeff(&best);
        if (assign[static_cast<std::size_t>(i)] != best) {
          assign[static_cast<std::size_t>(i)] = static_cast<int>(best);
          changed = true;
        }
      }
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, d);
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(K);
      for (Eigen::Index i = 0; i < n; ++i) {
        sums.row(assign[static_cast<std::size_t>(i)]) += X.row(i);
        counts(assign[static_cast<std::size_t>(i)]) += 1.0;
      }
      for (int c = 0; c < K; ++c)
        if (counts(c) > 0) centers.row(c) = sums.row(c) / counts(c);
      if (!changed && it > 0) break;
    }

    Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, K);
    for (Eigen::Index i = 0; i < n; ++i) resp(i, assign[static_cast<std::size_t>(i)]) = 1.0;

    const Eigen::VectorXd global_mean = X.colwise().mean();
    const Eigen::MatrixXd Xg = X.rowwise() - global_mean.transpose();
    const Eigen::MatrixXd global_cov = Xg.transpose() * Xg / static_cast<double>(n);

    std::vector<Component> comps(static_cast<std::size_t>(K));
    double previous = -std::numeric_limits<double>::infinity();
    Eigen::MatrixXd logp(n, K);
    for (int it = 0; it < max_iter; ++it) {
      // M step.
      for (int c = 0; c < K; ++c) {
        Component& comp = comps[static_cast<std::size_t>(c)];
        const double nk = resp.col(c).sum();
        Eigen::MatrixXd cov;
        if (nk < 1e-10) {
          comp.mean = global_mean;
          cov = global_cov;
          comp.log_weight = std::log(1e-10 / static_cast<double>(n));
        } else {
          comp.mean = (X.transpose() * resp.col(c)) / nk;
          const Eigen::MatrixXd Xc = X.rowwise() - comp.mean.transpose();
          cov = Xc.transpose() * (Xc.array().colwise() * resp.col(c).array()).matrix() / nk;
          comp.log_weight = std::log(nk / static_cast<double>(n));
        }
        cov.diagonal().array() += 1e-6;
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) throw FitError("GMM covariance is not positive definite");
        comp.chol = llt.matrixL();
        comp.log_det = 2.0 * comp.chol.diagonal().array().log().sum();
      }
      // E step.
      for (int c = 0; c < K; ++c) logp.col(c) = component_log_density(comps[static_cast<std::size_t>(c)], X);
      Eigen::VectorXd ll(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double m = logp.row(i).maxCoeff();
        const double lse = m + std::log((logp.row(i).array() - m).exp().sum());
        ll(i) = lse;
        resp.row(i) = (logp.row(i).array() - lse).exp();
      }
      const double mean_ll = ll.mean();
      if (std::abs(mean_ll - previous) < tol) break;
      previous = mean_ll;
    }
    auto model = std::make_unique<Gmm>(std::move(comps));
    model->train_ = model->score_rows(X);
    return model;
  }

  static ModelPtr load(const nlohmann::json& j) {
    std::vector<Component> comps;
    for (const auto& jc : j.at("components")) {
      Component c;
      c.log_weight = jc.at("log_weight").get<double>();
      c.mean = vector_from(jc.at("mean"));
      c.chol = matrix_from(jc.at("chol"));
      c.log_det = jc.at("log_det").get<double>();
      comps.push_back(std::move(c));
    }
    auto model = std::make_unique<Gmm>(std::move(comps));
    model->train_ = vector_from(j.at("train_scores"));
    return model;
  }

  Eigen::Index dimension() const override { return comps_.front().mean.size(); }

  double score(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    return score_rows(Eigen::MatrixXd(x.transpose()))(0);
  }

  Eigen::VectorXd score_rows(const Eigen::MatrixXd& X) const override {
    Eigen::MatrixXd logp(X.rows(), static_cast<Eigen::Index>(comps_.size()));
    for (std::size_t c = 0; c < comps_.size(); ++c)
      logp.col(static_cast<Eigen::Index>(c)) = component_log_density(comps_[c], X);
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double m = logp.row(i).maxCoeff();
      out(i) = -(m + std::log((logp.row(i).array() - m).exp().sum()));
    }
    return out;
  }

  const Eigen::VectorXd& training_scores() const override { return train_; }

  nlohmann::json to_json() const override {
    nlohmann::json jc = nlohmann::json::array();
    for (const auto& c : comps_)
      jc.push_back({{"log_weight", c.log_weight}, {"mean", vector_json(c.mean)}, {"chol", matrix_json(c.chol)},
                    {"log_det", c.log_det}});
    return {{"components", jc}, {"train_scores", vector_json(train_)}};
  }

 private:
  static Eigen::VectorXd component_log_density(const Component& c, const Eigen::MatrixXd& X) {
    const double d = static_cast<double>(X.cols());
    const Eigen::MatrixXd centered = (X.rowwise() - c.mean.transpose()).transpose();
    const Eigen::MatrixXd z = c.chol.triangularView<Eigen::Lower>().solve(centered);
    const Eigen::VectorXd mahal = z.colwise().squaredNorm().transpose();
    return (c.log_weight - 0.5 * (d * std::log(2.0 * std::numbers::pi) + c.log_det) - 0.5 * mahal.array()).matrix();
  }

  std::vector<Component> comps_;
  Eigen::VectorXd train_;
};

}  // namespace

ModelPtr fit_pca(const Hyperparameters& h, const Eigen::MatrixXd& X) { return Pca::fit(h, X); }
ModelPtr fit_abod(const Hyperparameters& h, const Eigen::MatrixXd& X) { return Abod::fit(h, X); }
ModelPtr fit_gmm(const Hyperparameters& h, const Eigen::MatrixXd& X, std::uint64_t seed) { return Gmm::fit(h, X, seed); }
ModelPtr load_pca(const nlohmann::json& j) { return Pca::load(j); }
ModelPtr load_abod(const nlohmann::json& j) { return Abod::load(j); }
ModelPtr load_gmm(const nlohmann::json& j) { return Gmm::load(j); }

}  // namespace pfad::detail
