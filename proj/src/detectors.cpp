#include "pfad/detectors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "detectors_impl.hpp"
#include "pfad/errors.hpp"
#include "pfad/eval.hpp"
#include "pfad/stats.hpp"

namespace pfad {

namespace {

constexpr std::array<std::string_view, 12> kNames = {"HBOS", "COPOD", "ECOD", "FeatureBagging", "kNN", "LOF",
                                                     "IForest", "LODA", "INNE", "PCA", "ABOD", "GMM"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool integral(double v) { return std::isfinite(v) && v == std::floor(v); }

void require(bool ok, DetectorKind kind, const std::string& what) {
  if (!ok) throw ConfigError(std::string(detector_name(kind)) + ": " + what);
}

void require_count(const Hyperparameters& h, DetectorKind kind, const char* name, double min) {
  const double v = h.at(name);
  require(integral(v) && v >= min, kind, std::string(name) + " must be an integer >= " + std::to_string(static_cast<int>(min)));
}

}  // namespace

std::string_view detector_name(DetectorKind k) { return kNames[static_cast<std::size_t>(k)]; }

std::optional<DetectorKind> parse_detector(std::string_view s) {
  const std::string l = lower(s);
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (lower(kNames[i]) == l) return static_cast<DetectorKind>(i);
  if (l == "fb" || l == "feature_bagging") return DetectorKind::FeatureBagging;
  if (l == "iforest" || l == "isolation_forest") return DetectorKind::IForest;
  return std::nullopt;
}

const Hyperparameters& default_hyperparameters(DetectorKind kind) {
  static const std::array<Hyperparameters, 12> defaults = {
      Hyperparameters{{"bins", 10}, {"alpha", 0.1}, {"tol", 0.5}, {"height_normalized", 0}},
      Hyperparameters{},
      Hyperparameters{},
      Hyperparameters{{"members", 10}, {"k", 20}},
      Hyperparameters{{"k", 5}},
      Hyperparameters{{"k", 20}},
      Hyperparameters{{"trees", 100}, {"subsample", 256}},
      Hyperparameters{{"projections", 100}, {"bins", 10}},
      Hyperparameters{{"members", 200}, {"sample_size", 8}},
      Hyperparameters{{"variance_fraction", 0.95}},
      Hyperparameters{{"k", 10}},
      Hyperparameters{{"components", 4}, {"max_iter", 100}, {"tol", 1e-3}},
  };
  return defaults[static_cast<std::size_t>(kind)];
}

DetectorConfig make_config(DetectorKind kind, const Hyperparameters& overrides, double contamination,
                           std::uint64_t seed) {
  DetectorConfig config{kind, default_hyperparameters(kind), contamination, seed};
  for (const auto& [name, value] : overrides) {
    if (!config.hyper.count(name))
      throw ConfigError(std::string(detector_name(kind)) + ": unknown hyperparameter '" + name + "'");
    config.hyper[name] = value;
  }
  validate_config(config);
  return config;
}

void validate_config(const DetectorConfig& c) {
  const auto& defaults = default_hyperparameters(c.kind);
  for (const auto& [name, value] : c.hyper) {
    require(defaults.count(name) > 0, c.kind, "unknown hyperparameter '" + name + "'");
    require(std::isfinite(value), c.kind, name + " must be finite");
  }
  for (const auto& [name, value] : defaults) require(c.hyper.count(name) > 0, c.kind, "missing hyperparameter '" + name + "'");
  require(c.contamination > 0.0 && c.contamination < 0.5, c.kind, "contamination must lie in (0, 0.5)");
  const auto& h = c.hyper;
  switch (c.kind) {
    case DetectorKind::HBOS:
      require_count(h, c.kind, "bins", 1);
      require(h.at("alpha") > 0, c.kind, "alpha must be > 0");
      require(h.at("tol") >= 0, c.kind, "tol must be >= 0");
      require(h.at("height_normalized") == 0 || h.at("height_normalized") == 1, c.kind, "height_normalized must be 0 or 1");
      break;
    case DetectorKind::COPOD:
    case DetectorKind::ECOD:
      break;
    case DetectorKind::FeatureBagging:
      require_count(h, c.kind, "members", 1);
      require_count(h, c.kind, "k", 1);
      break;
    case DetectorKind::kNN:
    case DetectorKind::LOF:
      require_count(h, c.kind, "k", 1);
      break;
    case DetectorKind::ABOD:
      require_count(h, c.kind, "k", 2);
      break;
    case DetectorKind::IForest:
      require_count(h, c.kind, "trees", 1);
      require_count(h, c.kind, "subsample", 2);
      break;
    case DetectorKind::LODA:
      require_count(h, c.kind, "projections", 1);
      require_count(h, c.kind, "bins", 1);
      break;
    case DetectorKind::INNE:
      require_count(h, c.kind, "members", 1);
      require_count(h, c.kind, "sample_size", 2);
      break;
    case DetectorKind::PCA:
      require(h.at("variance_fraction") > 0 && h.at("variance_fraction") <= 1, c.kind,
              "variance_fraction must lie in (0, 1]");
      break;
    case DetectorKind::GMM:
      require_count(h, c.kind, "components", 1);
      require_count(h, c.kind, "max_iter", 1);
      require(h.at("tol") > 0, c.kind, "tol must be > 0");
      break;
  }
}

std::size_t minimum_rows(const DetectorConfig& c) {
  switch (c.kind) {
    case DetectorKind::kNN:
    case DetectorKind::LOF:
    case DetectorKind::ABOD:
    case DetectorKind::FeatureBagging:
      return static_cast<std::size_t>(c.hyper.at("k")) + 1;
    case DetectorKind::IForest:
      return 2;
    case DetectorKind::INNE:
      return static_cast<std::size_t>(c.hyper.at("sample_size"));
    case DetectorKind::GMM:
      return static_cast<std::size_t>(c.hyper.at("components"));
    default:
      return 1;
  }
}

Eigen::VectorXd ScoringModel::score_rows(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = score(X.row(i).transpose());
  return out;
}

ScoreStats score_stats(const Eigen::VectorXd& s) {
  ScoreStats st;
  if (s.size() == 0) return st;
  st.min = s.minCoeff();
  st.max = s.maxCoeff();
  st.mean = s.mean();
  st.sd = std::sqrt((s.array() - st.mean).square().mean());
  return st;
}

double DetectorModel::score(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dimension())
    throw SchemaError("vector has " + std::to_string(x.size()) + " features, model expects " + std::to_string(dimension()));
  return state->score(x);
}

Eigen::VectorXd DetectorModel::score_rows(const Eigen::MatrixXd& X) const {
  if (X.cols() != dimension())
    throw SchemaError("matrix has " + std::to_string(X.cols()) + " features, model expects " + std::to_string(dimension()));
  if (X.rows() == 0) return Eigen::VectorXd(0);
  return state->score_rows(X);
}

double calibrate_threshold(const Eigen::VectorXd& train_scores, double contamination) {
  return quantile(train_scores, 1.0 - contamination);
}

DetectorModel fit_matrix(const DetectorConfig& config, const Eigen::MatrixXd& X) {
  using namespace detail;
  validate_config(config);
  const auto need = minimum_rows(config);
  if (static_cast<std::size_t>(X.rows()) < need || X.rows() == 0)
    throw FitError(std::string(detector_name(config.kind)) + " needs at least " + std::to_string(std::max<std::size_t>(need, 1)) +
                   " training rows, got " + std::to_string(X.rows()));
  if (X.cols() == 0) throw FitError("training matrix has no features");
  if (!X.allFinite()) throw FitError("training matrix contains non-finite values");
  if (config.kind == DetectorKind::FeatureBagging && X.cols() < 2)
    throw FitError("FeatureBagging needs at least 2 features");

  const auto& h = config.hyper;
  ModelPtr state;
  switch (config.kind) {
    case DetectorKind::HBOS: state = fit_hbos(h, X); break;
    case DetectorKind::COPOD: state = fit_copod(X); break;
    case DetectorKind::ECOD: state = fit_ecod(X); break;
    case DetectorKind::FeatureBagging: state = fit_feature_bagging(h, X, config.seed); break;
    case DetectorKind::kNN: state = fit_knn(h, X); break;
    case DetectorKind::LOF: state = fit_lof(h, X); break;
    case DetectorKind::IForest: state = fit_iforest(h, X, config.seed); break;
    case DetectorKind::LODA: state = fit_loda(h, X, config.seed); break;
    case DetectorKind::INNE: state = fit_inne(h, X, config.seed); break;
    case DetectorKind::PCA: state = fit_pca(h, X); break;
    case DetectorKind::ABOD: state = fit_abod(h, X); break;
    case DetectorKind::GMM: state = fit_gmm(h, X, config.seed); break;
  }
  DetectorModel model;
  model.config = config;
  const Eigen::VectorXd& train = state->training_scores();
  if (!train.allFinite()) throw FitError(std::string(detector_name(config.kind)) + " produced non-finite training scores");
  model.threshold = calibrate_threshold(train, config.contamination);
  model.train_stats = score_stats(train);
  model.state = std::move(state);
  return model;
}

DetectorModel fit(const DetectorConfig& config, const LabeledDataset& train) {
  for (std::size_t i = 0; i < train.size(); ++i)
    if (is_attack(train.labels[i]))
      throw GuidelineViolation(Guideline::GT4, "training data for " + std::string(detector_name(config.kind)) +
                                                   " contains an attack row (" +
                                                   std::string(class_name(train.labels[i])) + " at row " +
                                                   std::to_string(i) + ")");
  return fit_matrix(config, design_matrix(train));
}

GridResult grid_search(const DetectorConfig& base, const std::map<std::string, std::vector<double>>& grid,
                       const LabeledDataset& train, const LabeledDataset& validation) {
  const auto mask = attack_mask(validation.labels);
  if (std::none_of(mask.begin(), mask.end(), [](bool a) { return a; }))
    throw GridSearchError("labels required: validation split has no attack rows, F1 is undefined");
  for (const auto& [name, values] : grid) {
    if (!base.hyper.count(name))
      throw ConfigError(std::string(detector_name(base.kind)) + ": unknown hyperparameter '" + name + "' in grid");
    if (values.empty()) throw ConfigError("grid entry '" + name + "' has no values");
  }

  std::vector<Hyperparameters> points{base.hyper};
  for (const auto& [name, values] : grid) {
    std::vector<Hyperparameters> next;
    for (const auto& p : points)
      for (double v : values) {
        Hyperparameters q = p;
        q[name] = v;
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }

  const Eigen::MatrixXd Xtrain = design_matrix(train);
  const Eigen::MatrixXd Xval = design_matrix(validation);
  GridResult result;
  bool found = false;
  double best_f1 = -1.0;
  for (const auto& hyper : points) {
    GridPoint point{hyper, 0.0, {}};
    DetectorConfig config = base;
    config.hyper = hyper;
    try {
      validate_config(config);
      for (std::size_t i = 0; i < train.size(); ++i)
        if (is_attack(train.labels[i])) throw GuidelineViolation(Guideline::GT4, "grid-search training data contains attack rows");
      const DetectorModel model = fit_matrix(config, Xtrain);
      point.f1 = threshold_metrics(model.score_rows(Xval), mask, model.threshold).f1;
      if (!found || point.f1 > best_f1 || (point.f1 == best_f1 && hyper < result.best.hyper)) {
        found = true;
        best_f1 = point.f1;
        result.best = config;
      }
    } catch (const GuidelineViolation&) {
      throw;
    } catch (const Error& e) {
      point.error = e.what();
    }
    result.log.push_back(std::move(point));
  }
  if (!found) throw GridSearchError(std::string(detector_name(base.kind)) + ": every grid point failed to fit");
  return result;
}

nlohmann::json config_to_json(const DetectorConfig& c) {
  return {{"kind", detector_name(c.kind)}, {"hyperparameters", c.hyper}, {"contamination", c.contamination},
          {"seed", c.seed}};
}

DetectorConfig config_from_json(const nlohmann::json& j) {
  const auto kind = parse_detector(j.at("kind").get<std::string>());
  if (!kind) throw ConfigError("unknown detector kind '" + j.at("kind").get<std::string>() + "'");
  DetectorConfig c;
  c.kind = *kind;
  c.hyper = default_hyperparameters(*kind);
  if (j.contains("hyperparameters"))
    for (const auto& [name, value] : j.at("hyperparameters").items()) c.hyper[name] = value.get<double>();
  c.contamination = j.value("contamination", 0.01);
  c.seed = j.value("seed", std::uint64_t{42});
  validate_config(c);
  return c;
}

nlohmann::json detector_to_json(const DetectorModel& m) {
  return {{"format", "pfad-detector"},
          {"version", 1},
          {"config", config_to_json(m.config)},
          {"threshold", m.threshold},
          {"train_stats", {{"min", m.train_stats.min}, {"max", m.train_stats.max}, {"mean", m.train_stats.mean},
                           {"sd", m.train_stats.sd}}},
          {"state", m.state->to_json()}};
}

DetectorModel detector_from_json(const nlohmann::json& j) {
  using namespace detail;
  try {
    if (j.at("format") != "pfad-detector") throw SchemaError("not a detector container");
    if (j.at("version").get<int>() != 1) throw SchemaError("unsupported detector container version");
    DetectorModel m;
    m.config = config_from_json(j.at("config"));
    m.threshold = j.at("threshold").get<double>();
    const auto& st = j.at("train_stats");
    m.train_stats = {st.at("min").get<double>(), st.at("max").get<double>(), st.at("mean").get<double>(),
                     st.at("sd").get<double>()};
    const auto& s = j.at("state");
    switch (m.config.kind) {
      case DetectorKind::HBOS: m.state = load_hbos(s); break;
      case DetectorKind::COPOD: m.state = load_copod(s); break;
      case DetectorKind::ECOD: m.state = load_ecod(s); break;
      case DetectorKind::FeatureBagging: m.state = load_feature_bagging(s); break;
      case DetectorKind::kNN: m.state = load_knn(s); break;
      case DetectorKind::LOF: m.state = load_lof(s); break;
      case DetectorKind::IForest: m.state = load_iforest(s); break;
      case DetectorKind::LODA: m.state = load_loda(s); break;
      case DetectorKind::INNE: m.state = load_inne(s); break;
      case DetectorKind::PCA: m.state = load_pca(s); break;
      case DetectorKind::ABOD: m.state = load_abod(s); break;
      case DetectorKind::GMM: m.state = load_gmm(s); break;
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed detector container: ") + e.what());
  }
}

void save_detector(const DetectorModel& model, const std::string& path) {
  const auto bytes = nlohmann::json::to_cbor(detector_to_json(model));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

DetectorModel load_detector(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  nlohmann::json j;
  try {
    j = nlohmann::json::from_cbor(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return detector_from_json(j);
}

}  // namespace pfad
