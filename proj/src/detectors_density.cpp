#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "detectors_impl.hpp"
#include "pfad/rng.hpp"
#include "pfad/stats.hpp"

namespace pfad::detail {
namespace {

constexpr double kProbFloor = 1e-6;

Eigen::MatrixXd one_row(const Eigen::Ref<const Eigen::VectorXd>& x) { return x.transpose(); }

class Knn final : public ScoringModel {
 public:
  Knn(Eigen::MatrixXd points, int k) : index_(std::move(points)), k_(k) {}

  static ModelPtr fit(const Hyperparameters& h, const Eigen::MatrixXd& X) {
    auto model = std::make_unique<Knn>(X, hyper_int(h, "k"));
    model->train_ = model->index_.query_self(model->k_).distance.col(model->k_ - 1);
    return model;
  }

  static ModelPtr load(const nlohmann::json& j) {
    auto model = std::make_unique<Knn>(matrix_from(j.at("points")), j.at("k").get<int>());
    model->train_ = vector_from(j.at("train_scores"));
    return model;
  }

  Eigen::Index dimension() const override { return index_.points().cols(); }
  double score(const Eigen::Ref<const Eigen::VectorXd>& x) const override { return score_rows(one_row(x))(0); }
  Eigen::VectorXd score_rows(const Eigen::MatrixXd& X) const override {
    return index_.query(X, k_).distance.col(k_ - 1);
  }
  const Eigen::VectorXd& training_scores() const override { return train_; }
  nlohmann::json to_json() const override {
    return {{"points", matrix_json(index_.points())}, {"k", k_}, {"train_scores", vector_json(train_)}};
  }

 private:
  NeighborIndex index_;
  int k_;
  Eigen::VectorXd train_;
};

// Local outlier factor with reachability distances; lrd = 1 / (mean reach + 1e-10).
struct LofCore {
  NeighborIndex index;
  int k = 20;
  Eigen::VectorXd kdist, lrd, train;

  static LofCore fit(Eigen::MatrixXd X, int k) {
    LofCore core;
    core.index = NeighborIndex(std::move(X));
    core.k = k;
    const Neighbors nb = core.index.query_self(k);
    core.kdist = nb.distance.col(k - 1);
    core.lrd = core.local_density(nb);
    core.train = core.factor(nb, core.lrd);
    return core;
  }

  Eigen::VectorXd local_density(const Neighbors& nb) const {
    Eigen::VectorXd out(nb.index.rows());
    for (Eigen::Index i = 0; i < nb.index.rows(); ++i) {
      double reach = 0.0;
      for (int c = 0; c < k; ++c) reach += std::max(kdist(nb.index(i, c)), nb.distance(i, c));
      out(i) = 1.0 / (reach / k + 1e-10);
    }
    return out;
  }

  Eigen::VectorXd factor(const Neighbors& nb, const Eigen::VectorXd& own_lrd) const {
    Eigen::VectorXd out(nb.index.rows());
    for (Eigen::Index i = 0; i < nb.index.rows(); ++i) {
      double sum = 0.0;
      for (int c = 0; c < k; ++c) sum += lrd(nb.index(i, c));
      out(i) = sum / k / own_lrd(i);
    }
    return out;
  }

  Eigen::VectorXd score_rows(const Eigen::MatrixXd& X) const {
    const Neighbors nb = index.query(X, k);
    return factor(nb, local_density(nb));
  }
};

class Lof final : public ScoringModel {
 public:
  explicit Lof(LofCore core) : core_(std::move(core)) {}

  static ModelPtr fit(const Hyperparameters& h, const Eigen::MatrixXd& X) {
    return std::make_unique<Lof>(LofCore::fit(X, hyper_int(h, "k")));
  }

  static ModelPtr load(const nlohmann::json& j) {
    LofCore core;
    core.index = NeighborIndex(matrix_from(j.at("points")));
    core.k = j.at("k").get<int>();
    core.kdist = vector_from(j.at("kdist"));
    core.lrd = vector_from(j.at("lrd"));
    core.train = vector_from(j.at("train_scores"));
    return std::make_unique<Lof>(std::move(core));
  }

  Eigen::Index dimension() const override { return core_.index.points().cols(); }
  double score(const Eigen::Ref<const Eigen::VectorXd>& x) const override { return score_rows(one_row(x))(0); }
  Eigen::VectorXd score_rows(const Eigen::MatrixXd& X) const override { return core_.score_rows(X); }
  const Eigen::VectorXd& training_scores() const override { return core_.train; }
  nlohmann::json to_json() const override {
    return {{"points", matrix_json(core_.index.points())},
            {"k", core_.k},
            {"kdist", vector_json(core_.kdist)},
            {"lrd", vector_json(core_.lrd)},
            {"train_scores", vector_json(core_.train)}};
  }

 private:
  LofCore core_;
};

// Average path length of an unsuccessful search in a binary search tree of n nodes.
double path_norm(double n) {
  if (n <= 1.0) return 0.0;
  if (n <= 2.0) return 1.0;
  constexpr double kEuler = 0.5772156649015329;
  return 2.0 * (std::log(n - 1.0) + kEuler) - 2.0 * (n - 1.0) / n;
}

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double split = 0.0;
  int left = -1, right = -1;
  int size = 0;
};

class IsolationForest final : public ScoringModel {
 public:
  IsolationForest(std::vector<std::vector<TreeNode>> trees, int psi, Eigen::Index d)
      : trees_(std::move(trees)), psi_(psi), d_(d) {}

  static ModelPtr fit(const Hyperparameters& h, const Eigen::MatrixXd& X, std::uint64_t seed) {
    const int n = static_cast<int>(X.rows());
    const int psi = std::min(hyper_int(h, "subsample"), n);
    const int trees = hyper_int(h, "trees");
    const int height = static_cast<int>(std::ceil(std::log2(static_cast<double>(psi))));
    std::vector<std::vector<TreeNode>> forest;
    forest.reserve(static_cast<std::size_t>(trees));
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int t = 0; t < trees; ++t) {
      Rng rng(derive_seed(seed, "iforest/tree", static_cast<std::uint64_t>(t)));
      std::iota(all.begin(), all.end(), 0);
      for (int i = 0; i < psi; ++i)
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(n - i))]);
      std::vector<int> sample(all.begin(), all.begin() + psi);
      std::vector<TreeNode> nodes;
      grow(X, sample, 0, height, rng, nodes);
      forest.push_back(std::move(nodes));
    }
    auto model = std::make_unique<IsolationForest>(std::move(forest), psi, X.cols());
    model->train_ = model->score_rows(X);
    return model;
  }

  static ModelPtr load(const nlohmann::json& j) {
    std::vector<std::vector<TreeNode>> forest;
    for (const auto& jt : j.at("trees")) {
      std::vector<TreeNode> nodes;
      for (const auto& jn : jt) {
        TreeNode node;
        node.feature = jn.at(0).get<int>();
        node.split = jn.at(1).get<double>();
        node.left = jn.at(2).get<int>();
        node.right = jn.at(3).get<int>();
        node.size = jn.at(4).get<int>();
        nodes.push_back(node);
      }
      forest.push_back(std::move(nodes));
    }
    auto model = std::make_unique<IsolationForest>(std::move(forest), j.at("psi").get<int>(), j.at("d").get<Eigen::Index>());
    model->train_ = vector_from(j.at("train_scores"));
    return model;
  }

  Eigen::Index dimension() const override { return d_; }

  double score(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    double total = 0.0;
    for (const auto& nodes : trees_) {
      int at = 0, depth = 0;
      while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
        const TreeNode& node = nodes[static_cast<std::size_t>(at)];
        at = x(node.feature) < node.split ? node.left : node.right;
        ++depth;
      }
      total += depth + path_norm(nodes[static_cast<std::size_t>(at)].size);
    }
    const double mean = total / static_cast<double>(trees_.size());
    return std::exp2(-mean / path_norm(psi_));
  }

  const Eigen::VectorXd& training_scores() const override { return train_; }

  nlohmann::json to_json() const override {
    nlohmann::json jt = nlohmann::json::array();
    for (const auto& nodes : trees_) {
      nlohmann::json jn = nlohmann::json::array();
      for (const auto& n : nodes) jn.push_back({n.feature, n.split, n.left, n.right, n.size});
      jt.push_back(std::move(jn));
    }
    return {{"trees", jt}, {"psi", psi_}, {"d", d_}, {"train_scores", vector_json(train_)}};
  }

 private:
  static int grow(const Eigen::MatrixXd& X, std::vector<int>& rows, int depth, int height, Rng& rng,
                  std::vector<TreeNode>& nodes) {
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{});
    nodes.back().size = static_cast<int>(rows.size());
    if (depth >= height || rows.size() <= 1) return id;

    std::vector<int> candidates;
    std::vector<double> lo, hi;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      double a = X(rows[0], j), b = a;
      for (int r : rows) {
        a = std::min(a, X(r, j));
        b = std::max(b, X(r, j));
      }
      if (b > a) {
        candidates.push_back(static_cast<int>(j));
        lo.push_back(a);
        hi.push_back(b);
      }
    }
    if (candidates.empty()) return id;
    const auto pick = rng.below(candidates.size());
    const int f = candidates[pick];
    const double split = rng.uniform(lo[pick], hi[pick]);
    std::vector<int> left, right;
    for (int r : rows) (X(r, f) < split ? left : right).push_back(r);
    const int l = grow(X, left, depth + 1, height, rng, nodes);
    const int rr = grow(X, right, depth + 1, height, rng, nodes);
    TreeNode& node = nodes[static_cast<std::size_t>(id)];
    node.feature = f;
    node.split = split;
    node.left = l;
    node.right = rr;
    return id;
  }

  std::vector<std::vector<TreeNode>> trees_;
  int psi_;
  Eigen::Index d_;
  Eigen::VectorXd train_;
};

// Mean of z-normalised LOF scores over members fitted on random feature subsets.
class FeatureBagging final : public ScoringModel {
 public:
  struct Member {
    std::vector<int> features;
    LofCore lof;
    double mean = 0.0, sd = 1.0;
  };

  FeatureBagging(Eigen::Index d, std::vector<Member> members) : d_(d), members_(std::move(members)) {}

  static ModelPtr fit(const Hyperparameters& h, const Eigen::MatrixXd& X, std::uint64_t seed) {
    const int d = static_cast<int>(X.cols());
    const int m = hyper_int(h, "members");
    const int k = hyper_int(h, "k");
    const int lo = (d + 1) / 2;
    const int hi = std::max(lo, d - 1);
    std::vector<Member> members;
    for (int b = 0; b < m; ++b) {
      Rng rng(derive_seed(seed, "feature_bagging/member", static_cast<std::uint64_t>(b)));
      const int size = static_cast<int>(rng.integer(lo, hi));
      std::vector<int> all(static_cast<std::size_t>(d));
      std::iota(all.begin(), all.end(), 0);
      rng.shuffle(all.begin(), all.end());
      Member member;
      member.features.assign(all.begin(), all.begin() + size);
      std::sort(member.features.begin(), member.features.end());
      member.lof = LofCore::fit(X(Eigen::all, member.features), k);
      finish_member(member);
      members.push_back(std::move(member));
    }
    auto model = std::make_unique<FeatureBagging>(X.cols(), std::move(members));
    model->points_ = X;
    model->train_ = Eigen::VectorXd::Zero(X.rows());
    for (const auto& member : model->members_)
      model->train_ += (member.lof.train.array() - member.mean).matrix() / member.sd;
    model->train_ /= static_cast<double>(model->members_.size());
    return model;
  }

  static ModelPtr load(const nlohmann::json& j) {
    const Eigen::MatrixXd X = matrix_from(j.at("points"));
    std::vector<Member> members;
    for (const auto& jm : j.at("members")) {
      Member member;
      member.features = jm.at("features").get<std::vector<int>>();
      member.lof.index = NeighborIndex(X(Eigen::all, member.features));
      member.lof.k = jm.at("k").get<int>();
      member.lof.kdist = vector_from(jm.at("kdist"));
      member.lof.lrd = vector_from(jm.at("lrd"));
      member.lof.train = vector_from(jm.at("train_scores"));
      member.mean = jm.at("mean").get<double>();
      member.sd = jm.at("sd").get<double>();
      members.push_back(std::move(member));
    }
    auto model = std::make_unique<FeatureBagging>(X.cols(), std::move(members));
    model->points_ = X;
    model->train_ = vector_from(j.at("train_scores"));
    return model;
  }

  Eigen::Index dimension() const override { return d_; }
  double score(const Eigen::Ref<const Eigen::VectorXd>& x) const override { return score_rows(one_row(x))(0); }

  Eigen::VectorXd score_rows(const Eigen::MatrixXd& X) const override {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
    for (const auto& member : members_)
      out += (member.lof.score_rows(X(Eigen::all, member.features)).array() - member.mean).matrix() / member.sd;
    return out / static_cast<double>(members_.size());
  }

  const Eigen::VectorXd& training_scores() const override { return train_; }

  nlohmann::json to_json() const override {
    // The training matrix is stored once; members keep only column lists.
    nlohmann::json jm = nlohmann::json::array();
    for (const auto& member : members_)
      jm.push_back({{"features", member.features},
                    {"k", member.lof.k},
                    {"kdist", vector_json(member.lof.kdist)},
                    {"lrd", vector_json(member.lof.lrd)},
                    {"train_scores", vector_json(member.lof.train)},
                    {"mean", member.mean},
                    {"sd", member.sd}});
    return {{"points", matrix_json(points_)}, {"members", jm}, {"train_scores", vector_json(train_)}};
  }

 private:
  static void finish_member(Member& member) {
    const auto& s = member.lof.train;
    member.mean = s.mean();
    const double var = (s.array() - member.mean).square().mean();
    member.sd = var > 0 ? std::sqrt(var) : 1.0;
  }

  Eigen::Index d_;
  std::vector<Member> members_;
  Eigen::MatrixXd points_;
  Eigen::VectorXd train_;
};

// Sparse random projections with one 1-D histogram each.
class Loda final : public ScoringModel {
 public:
  Loda(Eigen::MatrixXd W, Eigen::VectorXd lo, Eigen::VectorXd width, Eigen::MatrixXd density)
      : W_(std::move(W)), lo_(std::move(lo)), width_(std::move(width)), density_(std::move(density)) {}

  static ModelPtr fit(const Hyperparameters& h, const Eigen::MatrixXd& X, std::uint64_t seed) {
    const int r = hyper_int(h, "projections");
    const int bins = hyper_int(h, "bins");
    const Eigen::Index d = X.cols(), n = X.rows();
    const int nonzero = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(r, d);
    for (int p = 0; p < r; ++p) {
      Rng rng(derive_seed(seed, "loda/projection", static_cast<std::uint64_t>(p)));
      std::vector<int> cols(static_cast<std::size_t>(d));
      std::iota(cols.begin(), cols.end(), 0);
      rng.shuffle(cols.begin(), cols.end());
      for (int c = 0; c < nonzero; ++c) W(p, cols[static_cast<std::size_t>(c)]) = rng.normal();
    }
    const Eigen::MatrixXd Z = X * W.transpose();
    Eigen::VectorXd lo(r), width(r);
    Eigen::MatrixXd density = Eigen::MatrixXd::Zero(r, bins);
    for (int p = 0; p < r; ++p) {
      double a = Z.col(p).minCoeff(), b = Z.col(p).maxCoeff();
      if (!(b > a)) {
        a -= 0.5;
        b += 0.5;
      }
      lo(p) = a;
      width(p) = (b - a) / bins;
      while (a + width(p) * bins < b) width(p) = std::nextafter(width(p), HUGE_VAL);
      for (Eigen::Index i = 0; i < n; ++i) density(p, bin_of(Z(i, p), a, width(p), bins)) += 1.0;
      density.row(p) /= static_cast<double>(n) * width(p);
    }
    auto model = std::make_unique<Loda>(std::move(W), lo, width, density);
    model->train_ = model->score_rows(X);
    return model;
  }

  static ModelPtr load(const nlohmann::json& j) {
    auto model = std::make_unique<Loda>(matrix_from(j.at("W")), vector_from(j.at("lo")), vector_from(j.at("width")),
                                        matrix_from(j.at("density")));
    model->train_ = vector_from(j.at("train_scores"));
    return model;
  }

  Eigen::Index dimension() const override { return W_.cols(); }

  double score(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    const Eigen::VectorXd z = W_ * x;
    const auto bins = static_cast<int>(density_.cols());
    double s = 0.0;
    for (Eigen::Index p = 0; p < z.size(); ++p) {
      const double hi = lo_(p) + width_(p) * bins;
      const double dens = (z(p) < lo_(p) || z(p) > hi) ? 0.0 : density_(p, bin_of(z(p), lo_(p), width_(p), bins));
      s -= std::log(std::max(dens, kProbFloor));
    }
    return s / static_cast<double>(z.size());
  }

  const Eigen::VectorXd& training_scores() const override { return train_; }

  nlohmann::json to_json() const override {
    return {{"W", matrix_json(W_)},
            {"lo", vector_json(lo_)},
            {"width", vector_json(width_)},
            {"density", matrix_json(density_)},
            {"train_scores", vector_json(train_)}};
  }

 private:
  static Eigen::Index bin_of(double v, double lo, double width, int bins) {
    const double b = std::floor((v - lo) / width);
    return static_cast<Eigen::Index>(std::clamp(b, 0.0, static_cast<double>(bins - 1)));
  }

  Eigen::MatrixXd W_;
  Eigen::VectorXd lo_, width_;
  Eigen::MatrixXd density_;
  Eigen::VectorXd train_;
};

// Hyperspheres around subsample points with radius = distance to the nearest
// other point of the same subsample.
class Inne final : public ScoringModel {
 public:
  Inne(Eigen::MatrixXd centers, Eigen::VectorXd radius, Eigen::VectorXd isolation, int psi)
      : centers_(std::move(centers)), radius_(std::move(radius)), isolation_(std::move(isolation)), psi_(psi) {}

  static ModelPtr fit(const Hyperparameters& h, const Eigen::MatrixXd& X, std::uint64_t seed) {
    const int t = hyper_int(h, "members");
    const int psi = hyper_int(h, "sample_size");
    const auto n = static_cast<std::uint64_t>(X.rows());
    Eigen::MatrixXd centers(static_cast<Eigen::Index>(t) * psi, X.cols());
    Eigen::VectorXd radius(centers.rows()), isolation(centers.rows());
    std::vector<int> all(n);
    for (int m = 0; m < t; ++m) {
      Rng rng(derive_seed(seed, "inne/member", static_cast<std::uint64_t>(m)));
      std::iota(all.begin(), all.end(), 0);
      for (int i = 0; i < psi; ++i)
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(i) + rng.below(n - static_cast<std::uint64_t>(i))]);
      const Eigen::Index base = static_cast<Eigen::Index>(m) * psi;
      for (int i = 0; i < psi; ++i) centers.row(base + i) = X.row(all[static_cast<std::size_t>(i)]);
      std::vector<int> nearest(static_cast<std::size_t>(psi), -1);
      for (int i = 0; i < psi; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < psi; ++k) {
          if (k == i) continue;
          const double dist = (centers.row(base + i) - centers.row(base + k)).norm();
          if (dist < best) {
            best = dist;
            nearest[static_cast<std::size_t>(i)] = k;
          }
        }
        radius(base + i) = best;
      }
      for (int i = 0; i < psi; ++i) {
        const double r = radius(base + i);
        isolation(base + i) = r > 0 ? 1.0 - radius(base + nearest[static_cast<std::size_t>(i)]) / r : 0.0;
      }
    }
    auto model = std::make_unique<Inne>(std::move(centers), radius, isolation, psi);
    model->train_ = model->score_rows(X);
    return model;
  }

  static ModelPtr load(const nlohmann::json& j) {
    auto model = std::make_unique<Inne>(matrix_from(j.at("centers")), vector_from(j.at("radius")),
                                        vector_from(j.at("isolation")), j.at("psi").get<int>());
    model->train_ = vector_from(j.at("train_scores"));
    return model;
  }

  Eigen::Index dimension() const override { return centers_.cols(); }

  double score(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    const Eigen::VectorXd dist = (centers_.rowwise() - x.transpose()).rowwise().norm();
    const Eigen::Index members = centers_.rows() / psi_;
    double total = 0.0;
    for (Eigen::Index m = 0; m < members; ++m) {
      double best_radius = std::numeric_limits<double>::infinity();
      double s = 1.0;
      for (Eigen::Index i = m * psi_; i < (m + 1) * psi_; ++i) {
        if (dist(i) <= radius_(i) && radius_(i) < best_radius) {
          best_radius = radius_(i);
          s = isolation_(i);
        }
      }
      total += s;
    }
    return total / static_cast<double>(members);
  }

  const Eigen::VectorXd& training_scores() const override { return train_; }

  nlohmann::json to_json() const override {
    return {{"centers", matrix_json(centers_)},
            {"radius", vector_json(radius_)},
            {"isolation", vector_json(isolation_)},
            {"psi", psi_},
            {"train_scores", vector_json(train_)}};
  }

 private:
  Eigen::MatrixXd centers_;
  Eigen::VectorXd radius_, isolation_;
  int psi_;
  Eigen::VectorXd train_;
};

}  // namespace

ModelPtr fit_knn(const Hyperparameters& h, const Eigen::MatrixXd& X) { return Knn::fit(h, X); }
ModelPtr fit_lof(const Hyperparameters& h, const Eigen::MatrixXd& X) { return Lof::fit(h, X); }
ModelPtr fit_iforest(const Hyperparameters& h, const Eigen::MatrixXd& X, std::uint64_t seed) {
  return IsolationForest::fit(h, X, seed);
}
ModelPtr fit_feature_bagging(const Hyperparameters& h, const Eigen::MatrixXd& X, std::uint64_t seed) {
  return FeatureBagging::fit(h, X, seed);
}
ModelPtr fit_loda(const Hyperparameters& h, const Eigen::MatrixXd& X, std::uint64_t seed) {
  return Loda::fit(h, X, seed);
}
ModelPtr fit_inne(const Hyperparameters& h, const Eigen::MatrixXd& X, std::uint64_t seed) {
  return Inne::fit(h, X, seed);
}
ModelPtr load_knn(const nlohmann::json& j) { return Knn::load(j); }
ModelPtr load_lof(const nlohmann::json& j) { return Lof::load(j); }
ModelPtr load_iforest(const nlohmann::json& j) { return IsolationForest::load(j); }
ModelPtr load_feature_bagging(const nlohmann::json& j) { return FeatureBagging::load(j); }
ModelPtr load_loda(const nlohmann::json& j) { return Loda::load(j); }
ModelPtr load_inne(const nlohmann::json& j) { return Inne::load(j); }

}  // namespace pfad::detail
