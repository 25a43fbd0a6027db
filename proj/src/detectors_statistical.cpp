#include <algorithm>
#include <cmath>
#include <span>

#include "detectors_impl.hpp"
#include "pfad/stats.hpp"

namespace pfad::detail {
namespace {

constexpr double kProbFloor = 1e-6;

// Static-width per-feature histograms. Bin scores are tabulated at fit time.
class Hbos final : public ScoringModel {
 public:
  Hbos(Eigen::VectorXd lo, Eigen::VectorXd width, Eigen::MatrixXd bin_score, Eigen::VectorXd far_score,
       double tol)
      : lo_(std::move(lo)), width_(std::move(width)), bin_score_(std::move(bin_score)),
        far_score_(std::move(far_score)), tol_(tol) {}

  static ModelPtr fit(const Hyperparameters& h, const Eigen::MatrixXd& X) {
    const int bins = hyper_int(h, "bins");
    const double alpha = h.at("alpha");
    const bool height = h.at("height_normalized") != 0.0;
    const Eigen::Index n = X.rows(), d = X.cols();
    Eigen::VectorXd lo(d), width(d), far(d);
    Eigen::MatrixXd table(d, bins);
    for (Eigen::Index j = 0; j < d; ++j) {
      double a = X.col(j).minCoeff(), b = X.col(j).maxCoeff();
      if (!(b > a)) {
        a -= 0.5;
        b += 0.5;
      }
      lo(j) = a;
      width(j) = (b - a) / bins;
      // lo + width * bins can round below the maximum; the top edge must cover it.
      while (a + width(j) * bins < b) width(j) = std::nextafter(width(j), HUGE_VAL);
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(bins);
      for (Eigen::Index i = 0; i < n; ++i) counts(bin_of(X(i, j), a, width(j), bins)) += 1.0;
      if (height) {
        const double peak = counts.maxCoeff();
        for (int b2 = 0; b2 < bins; ++b2) table(j, b2) = -std::log(counts(b2) / peak + kProbFloor);
        far(j) = -std::log(kProbFloor);
      } else {
        for (int b2 = 0; b2 < bins; ++b2)
          table(j, b2) = -std::log(counts(b2) / (static_cast<double>(n) * width(j)) + alpha);
        far(j) = table.row(j).maxCoeff();
      }
    }
    auto model = std::make_unique<Hbos>(lo, width, table, far, height ? 0.0 : h.at("tol"));
    model->train_ = model->score_rows(X);
    return model;
  }

  static ModelPtr load(const nlohmann::json& j) {
    auto model = std::make_unique<Hbos>(vector_from(j.at("lo")), vector_from(j.at("width")),
                                        matrix_from(j.at("bin_score")), vector_from(j.at("far_score")),
                                        j.at("tol").get<double>());
    model->train_ = vector_from(j.at("train_scores"));
    return model;
  }

  Eigen::Index dimension() const override { return lo_.size(); }

  double score(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    const auto bins = bin_score_.cols();
    double s = 0.0;
    for (Eigen::Index j = 0; j < lo_.size(); ++j) {
      const double w = width_(j);
      const double hi = lo_(j) + w * static_cast<double>(bins);
      const double v = x(j);
      if (v < lo_(j)) {
        s += (lo_(j) - v <= tol_ * w) ? bin_score_(j, 0) : far_score_(j);
      } else if (v > hi) {
        s += (v - hi <= tol_ * w) ? bin_score_(j, bins - 1) : far_score_(j);
      } else {
        s += bin_score_(j, bin_of(v, lo_(j), w, static_cast<int>(bins)));
      }
    }
    return s;
  }

  const Eigen::VectorXd& training_scores() const override { return train_; }

  nlohmann::json to_json() const override {
    return {{"lo", vector_json(lo_)},           {"width", vector_json(width_)},
            {"bin_score", matrix_json(bin_score_)}, {"far_score", vector_json(far_score_)},
            {"tol", tol_},                      {"train_scores", vector_json(train_)}};
  }

 private:
  static Eigen::Index bin_of(double v, double lo, double width, int bins) {
    const double b = std::floor((v - lo) / width);
    return static_cast<Eigen::Index>(std::clamp(b, 0.0, static_cast<double>(bins - 1)));
  }

  Eigen::VectorXd lo_, width_;
  Eigen::MatrixXd bin_score_;  // d x bins
  Eigen::VectorXd far_score_;
  double tol_;
  Eigen::VectorXd train_;
};

// Shared machinery of the two empirical-CDF detectors: per-dimension sorted
// training values and the skewness sign that picks the informative tail.
class TailModel : public ScoringModel {
 public:
  TailModel(Eigen::MatrixXd sorted, Eigen::VectorXd skew, double floor)
      : sorted_(std::move(sorted)), skew_(std::move(skew)), floor_(floor) {}

  Eigen::Index dimension() const override { return sorted_.cols(); }

  double score(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    const double n = static_cast<double>(sorted_.rows());
    double left = 0, right = 0, skewed = 0;
    for (Eigen::Index j = 0; j < sorted_.cols(); ++j) {
      const double* b = sorted_.col(j).data();
      const double* e = b + sorted_.rows();
      const double le = static_cast<double>(std::upper_bound(b, e, x(j)) - b) / n;
      const double ge = static_cast<double>(e - std::lower_bound(b, e, x(j))) / n;
      const double ul = -std::log(std::max(le, floor_));
      const double ur = -std::log(std::max(ge, floor_));
      left += ul;
      right += ur;
      skewed += skew_(j) < 0 ? ul : ur;
    }
    return std::max({left, right, skewed});
  }

  const Eigen::VectorXd& training_scores() const override { return train_; }

  nlohmann::json to_json() const override {
    return {{"sorted", matrix_json(sorted_)}, {"skew", vector_json(skew_)}, {"floor", floor_},
            {"train_scores", vector_json(train_)}};
  }

  static std::unique_ptr<TailModel> fit(const Eigen::MatrixXd& X, bool floor_at_one_over_n) {
    Eigen::MatrixXd sorted = X;
    Eigen::VectorXd skew(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      std::sort(sorted.col(j).data(), sorted.col(j).data() + sorted.rows());
      skew(j) = skewness(std::span<const double>(sorted.col(j).data(), static_cast<std::size_t>(X.rows())));
    }
    const double floor = floor_at_one_over_n ? 1.0 / static_cast<double>(X.rows()) : kProbFloor;
    auto model = std::make_unique<TailModel>(std::move(sorted), std::move(skew), floor);
    model->train_ = model->score_rows(X);
    return model;
  }

  static std::unique_ptr<TailModel> load(const nlohmann::json& j) {
    auto model = std::make_unique<TailModel>(matrix_from(j.at("sorted")), vector_from(j.at("skew")),
                                             j.at("floor").get<double>());
    model->train_ = vector_from(j.at("train_scores"));
    return model;
  }

 private:
  Eigen::MatrixXd sorted_;
  Eigen::VectorXd skew_;
  double floor_;
  Eigen::VectorXd train_;
};

}  // namespace

ModelPtr fit_hbos(const Hyperparameters& h, const Eigen::MatrixXd& X) { return Hbos::fit(h, X); }
ModelPtr load_hbos(const nlohmann::json& j) { return Hbos::load(j); }
ModelPtr fit_copod(const Eigen::MatrixXd& X) { return TailModel::fit(X, false); }
ModelPtr load_copod(const nlohmann::json& j) { return TailModel::load(j); }
ModelPtr fit_ecod(const Eigen::MatrixXd& X) { return TailModel::fit(X, true); }
ModelPtr load_ecod(const nlohmann::json& j) { return TailModel::load(j); }

}  // namespace pfad::detail
