#include <cmath>
#include <set>

#include "doctest.h"
#include "pfad/detectors.hpp"
#include "pfad/errors.hpp"
#include "pfad/eval.hpp"
#include "pfad/neighbors.hpp"
#include "pfad/rng.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace pfad;
using pfad::testing::blob_benchmark;
using pfad::testing::random_matrix;

namespace {

FeatureSchema numeric_schema(Eigen::Index d) {
  std::vector<FeatureDescriptor> f;
  for (Eigen::Index j = 0; j < d; ++j)
    f.push_back({"f" + std::to_string(j), FeatureKind::numerical, Protocol::pfcp, false, false, {}, {}});
  return FeatureSchema(std::move(f));
}

LabeledDataset dataset(const Eigen::MatrixXd& X, const std::vector<ClassLabel>& labels) {
  LabeledDataset ds;
  ds.schema = numeric_schema(X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    ds.add(FeatureVector{{}, X.row(i).transpose()}, labels[static_cast<std::size_t>(i)], static_cast<std::uint64_t>(i));
  return ds;
}

LabeledDataset benign(const Eigen::MatrixXd& X) {
  return dataset(X, std::vector<ClassLabel>(static_cast<std::size_t>(X.rows()), ClassLabel::Normal));
}

Eigen::MatrixXd column(std::initializer_list<double> v) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) X(i++, 0) = x;
  return X;
}

}  // namespace

TEST_CASE("detector names round-trip case-insensitively") {
  for (auto k : kAllDetectors) {
    CHECK(parse_detector(detector_name(k)) == k);
    std::string lower(detector_name(k));
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    CHECK(parse_detector(lower) == k);
  }
  CHECK_FALSE(parse_detector("OCSVM").has_value());
}

TEST_CASE("configuration validation") {
  CHECK_THROWS_AS(make_config(DetectorKind::kNN, {{"neighbours", 3}}), ConfigError);
  CHECK_THROWS_AS(validate_config(make_config(DetectorKind::kNN, {{"k", 0}})), ConfigError);
  CHECK_THROWS_AS(validate_config(make_config(DetectorKind::HBOS, {}, 0.5)), ConfigError);
  CHECK_THROWS_AS(validate_config(make_config(DetectorKind::HBOS, {}, 0.0)), ConfigError);
  CHECK_NOTHROW(validate_config(make_config(DetectorKind::HBOS, {}, 0.01)));
  for (auto k : kAllDetectors) CHECK_NOTHROW(validate_config(make_config(k)));
}

TEST_CASE("kNN scores the k-th neighbour distance") {
  const auto m = fit_matrix(make_config(DetectorKind::kNN, {{"k", 1}}), column({0, 10}));
  CHECK(m.score(Eigen::VectorXd::Constant(1, 5.0)) == doctest::Approx(5.0));
  CHECK(m.score(Eigen::VectorXd::Constant(1, 0.0)) == 0.0);
  CHECK(m.score(Eigen::VectorXd::Constant(1, -3.0)) == doctest::Approx(3.0));
  // Training scores leave each row out: the other point is 10 away.
  CHECK(m.state->training_scores()(0) == doctest::Approx(10.0));
}

TEST_CASE("HBOS with one height-normalized bin scores every inlier near zero") {
  Rng rng(3);
  const auto X = random_matrix(rng, 50, 3);
  const auto m = fit_matrix(make_config(DetectorKind::HBOS, {{"bins", 1}, {"height_normalized", 1}}), X);
  for (Eigen::Index i = 0; i < X.rows(); ++i) CHECK(std::abs(m.score(X.row(i).transpose())) < 1e-5);
}

TEST_CASE("GMM with one component grows with distance from the mean") {
  Rng rng(5);
  const auto X = random_matrix(rng, 200, 1);
  const auto m = fit_matrix(make_config(DetectorKind::GMM, {{"components", 1}}), X);
  const double mu = X.col(0).mean();
  double last = -1e300;
  for (double r : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double up = m.score(Eigen::VectorXd::Constant(1, mu + r));
    const double down = m.score(Eigen::VectorXd::Constant(1, mu - r));
    CHECK(up == doctest::Approx(down).epsilon(1e-9));
    CHECK(up > last - 1e-12);
    last = up;
  }
}

TEST_CASE("IForest scores lie in (0, 1]") {
  Rng rng(9);
  const auto X = random_matrix(rng, 300, 4);
  const auto m = fit_matrix(make_config(DetectorKind::IForest), X);
  const auto s = m.score_rows(random_matrix(rng, 100, 4) * 5.0);
  CHECK(s.minCoeff() > 0.0);
  CHECK(s.maxCoeff() <= 1.0);
}

TEST_CASE("PCA keeping every component reconstructs training rows exactly") {
  Rng rng(11);
  const auto X = random_matrix(rng, 40, 3);
  const auto m = fit_matrix(make_config(DetectorKind::PCA, {{"variance_fraction", 1.0}}), X);
  for (Eigen::Index i = 0; i < X.rows(); ++i) CHECK(std::abs(m.score(X.row(i).transpose())) < 1e-9);
}

TEST_CASE("threshold is the linear-interpolation quantile and the rule is strict") {
  Eigen::VectorXd s(100);
  for (int i = 0; i < 100; ++i) s(i) = i + 1;
  CHECK(calibrate_threshold(s, 0.01) == doctest::Approx(99.01).epsilon(1e-12));
  CHECK(calibrate_threshold(Eigen::VectorXd::Constant(7, 2.5), 0.1) == 2.5);
  CHECK_FALSE(is_anomalous(2.5, 2.5));
  CHECK(is_anomalous(std::nextafter(2.5, 3.0), 2.5));

  // All-equal training scores: nothing seen at fit time is flagged.
  const auto m = fit_matrix(make_config(DetectorKind::kNN, {{"k", 1}}), column({1, 1, 1, 1}));
  CHECK(m.threshold == 0.0);
  CHECK_FALSE(m.decide(Eigen::VectorXd::Constant(1, 1.0)));
  CHECK(m.decide(Eigen::VectorXd::Constant(1, 1.5)));
}

TEST_CASE("k-d tree neighbours equal an all-pairs scan, ties included") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = static_cast<Eigen::Index>(5 + rng.integer(0, 120));
    const auto d = static_cast<Eigen::Index>(1 + rng.integer(0, 5));
    Eigen::MatrixXd P = random_matrix(rng, n, d);
    // Integer grids produce many equal distances.
    if (trial % 2) P = P.array().round();
    const int k = static_cast<int>(1 + rng.integer(0, std::min<Eigen::Index>(n - 2, 7)));
    const NeighborIndex index(P);
    const Eigen::MatrixXd Q = random_matrix(rng, 20, d).array().round();
    const auto nb = index.query(Q, k);
    for (Eigen::Index q = 0; q < Q.rows(); ++q) {
      const auto ref = pfad::testing::all_distances(P, Q.row(q).transpose());
      for (int c = 0; c < k; ++c) {
        CHECK(nb.index(q, c) == ref[static_cast<std::size_t>(c)].second);
        CHECK(nb.distance(q, c) == doctest::Approx(ref[static_cast<std::size_t>(c)].first).epsilon(1e-12));
      }
    }
    const auto self = index.query_self(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ref = pfad::testing::all_distances(P, P.row(i).transpose(), static_cast<int>(i));
      for (int c = 0; c < k; ++c) CHECK(self.index(i, c) == ref[static_cast<std::size_t>(c)].second);
    }
  }
}

TEST_CASE("kNN and LOF agree with brute-force references") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto n = static_cast<Eigen::Index>(12 + rng.integer(0, 50));
    const auto d = static_cast<Eigen::Index>(1 + rng.integer(0, 7));
    const auto X = random_matrix(rng, n, d);
    const int k = static_cast<int>(1 + rng.integer(0, 9));
    const auto knn = fit_matrix(make_config(DetectorKind::kNN, {{"k", static_cast<double>(k)}}), X);
    const auto lof = fit_matrix(make_config(DetectorKind::LOF, {{"k", static_cast<double>(k)}}), X);
    const pfad::testing::BruteLof ref(X, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd xi = X.row(i).transpose();
      CHECK(std::abs(knn.state->training_scores()(i) - pfad::testing::brute_knn(X, xi, k, static_cast<int>(i))) < 1e-9);
      CHECK(std::abs(lof.state->training_scores()(i) - ref.score(xi, static_cast<int>(i))) < 1e-9);
    }
    const Eigen::MatrixXd Q = random_matrix(rng, 10, d) * 2.0;
    for (Eigen::Index q = 0; q < Q.rows(); ++q) {
      const Eigen::VectorXd xq = Q.row(q).transpose();
      CHECK(std::abs(knn.score(xq) - pfad::testing::brute_knn(X, xq, k)) < 1e-9);
      CHECK(std::abs(lof.score(xq) - ref.score(xq)) < 1e-9);
    }
  }
}

TEST_CASE("distance-based scores are translation invariant") {
  Rng rng(29);
  const auto X = random_matrix(rng, 60, 3);
  const Eigen::MatrixXd Q = random_matrix(rng, 15, 3);
  const Eigen::RowVector3d shift(100.0, -40.0, 7.5);
  for (auto kind : {DetectorKind::kNN, DetectorKind::LOF, DetectorKind::PCA, DetectorKind::GMM}) {
    CAPTURE(detector_name(kind));
    const auto a = fit_matrix(make_config(kind), X).score_rows(Q);
    const auto b = fit_matrix(make_config(kind), X.rowwise() + shift).score_rows(Q.rowwise() + shift);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6 * (1.0 + a.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("every detector separates the blob benchmark") {
  for (std::uint64_t seed : {42ULL, 7ULL}) {
    const auto blob = blob_benchmark(seed);
    for (auto kind : kAllDetectors) {
      CAPTURE(detector_name(kind));
      const auto m = fit_matrix(make_config(kind, {}, 0.01, seed), blob.train);
      CHECK(auc(m.score_rows(blob.test), blob.is_outlier) == 1.0);
    }
  }
}

TEST_CASE("seeded detectors are deterministic and the seed matters") {
  Rng rng(31);
  const auto X = random_matrix(rng, 200, 4);
  const Eigen::MatrixXd Q = random_matrix(rng, 30, 4);
  for (auto kind : {DetectorKind::IForest, DetectorKind::LODA, DetectorKind::INNE, DetectorKind::FeatureBagging,
                    DetectorKind::GMM}) {
    CAPTURE(detector_name(kind));
    const auto a = fit_matrix(make_config(kind, {}, 0.01, 1), X).score_rows(Q);
    const auto b = fit_matrix(make_config(kind, {}, 0.01, 1), X).score_rows(Q);
    CHECK(a == b);
  }
  const auto a = fit_matrix(make_config(DetectorKind::IForest, {}, 0.01, 1), X).score_rows(Q);
  const auto c = fit_matrix(make_config(DetectorKind::IForest, {}, 0.01, 2), X).score_rows(Q);
  CHECK(a != c);
}

TEST_CASE("saved detectors score identically after loading") {
  Rng rng(37);
  const auto X = random_matrix(rng, 120, 3);
  const Eigen::MatrixXd Q = random_matrix(rng, 25, 3) * 3.0;
  pfad::testing::TempDir dir("detectors");
  for (auto kind : kAllDetectors) {
    CAPTURE(detector_name(kind));
    const auto m = fit_matrix(make_config(kind), X);
    const auto path = dir.file(std::string(detector_name(kind)) + ".cbor");
    save_detector(m, path);
    const auto back = load_detector(path);
    CHECK(back.threshold == m.threshold);
    CHECK(back.config.hyper == m.config.hyper);
    CHECK(back.score_rows(Q) == m.score_rows(Q));
  }
  CHECK_THROWS_AS(load_detector(dir.file("absent.cbor")), IoError);
}

TEST_CASE("fit rejects attack rows, short data and wrong dimensions") {
  Rng rng(41);
  const auto X = random_matrix(rng, 30, 2);
  std::vector<ClassLabel> labels(30, ClassLabel::Normal);
  labels[7] = ClassLabel::Flood;
  try {
    fit(make_config(DetectorKind::HBOS), dataset(X, labels));
    FAIL("expected GT4");
  } catch (const GuidelineViolation& e) {
    CHECK(e.code() == "GT4");
  }
  CHECK_THROWS_AS(fit_matrix(make_config(DetectorKind::kNN, {{"k", 5}}), X.topRows(5)), FitError);
  CHECK(minimum_rows(make_config(DetectorKind::kNN, {{"k", 5}})) == 6);
  CHECK_NOTHROW(fit_matrix(make_config(DetectorKind::kNN, {{"k", 5}}), X.topRows(6)));
  const auto m = fit(make_config(DetectorKind::HBOS), benign(X));
  CHECK_THROWS_AS(m.score(Eigen::VectorXd::Zero(3)), SchemaError);
}

TEST_CASE("grid search logs every point and picks the best F1 with the smaller tuple on ties") {
  const auto blob = blob_benchmark(42);
  std::vector<ClassLabel> labels;
  for (bool o : blob.is_outlier) labels.push_back(o ? ClassLabel::Flood : ClassLabel::Normal);
  const auto train = benign(blob.train);
  const auto val = dataset(blob.test, labels);

  SUBCASE("single point") {
    const auto r = grid_search(make_config(DetectorKind::kNN), {{"k", {3}}}, train, val);
    REQUIRE(r.log.size() == 1);
    CHECK(r.best.hyper.at("k") == 3);
  }
  SUBCASE("cartesian product") {
    const auto r = grid_search(make_config(DetectorKind::HBOS), {{"bins", {5, 10}}, {"alpha", {0.01, 0.1}}}, train, val);
    REQUIRE(r.log.size() == 4);
    double best = -1;
    for (const auto& p : r.log) best = std::max(best, p.f1);
    // The winner is the first maximal point in log order, which is name order.
    const GridPoint* first = nullptr;
    for (const auto& p : r.log)
      if (p.f1 == best) {
        first = &p;
        break;
      }
    REQUIRE(first != nullptr);
    CHECK(r.best.hyper.at("bins") == first->hyper.at("bins"));
    CHECK(r.best.hyper.at("alpha") == first->hyper.at("alpha"));
    std::set<std::pair<double, double>> seen;
    for (const auto& p : r.log) seen.insert({p.hyper.at("alpha"), p.hyper.at("bins")});
    CHECK(seen.size() == 4);
  }
  SUBCASE("every point failing") {
    CHECK_THROWS_AS(grid_search(make_config(DetectorKind::kNN), {{"k", {400, 500}}}, train, val), GridSearchError);
  }
  SUBCASE("benign-only validation") {
    CHECK_THROWS_AS(grid_search(make_config(DetectorKind::kNN), {{"k", {1, 5}}}, train, benign(blob.train)),
                    GridSearchError);
  }
}

TEST_CASE("score statistics") {
  Eigen::VectorXd s(4);
  s << 1, 2, 3, 4;
  const auto st = score_stats(s);
  CHECK(st.min == 1);
  CHECK(st.max == 4);
  CHECK(st.mean == 2.5);
  CHECK(st.sd > 0);
}
