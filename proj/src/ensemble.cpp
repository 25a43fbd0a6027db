#include "pfad/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

#include "json_eigen.hpp"
#include "pfad/errors.hpp"
#include "pfad/eval.hpp"

namespace pfad {

const std::vector<EnsembleSpec>& ensemble_presets() {
  using K = DetectorKind;
  static const std::vector<EnsembleSpec> presets = {
      {"HKAIP", {K::HBOS, K::kNN, K::ABOD, K::INNE, K::PCA}, 10.0, 10.0},
      {"HKGIP", {K::HBOS, K::kNN, K::GMM, K::INNE, K::PCA}, 10.0, 10.0},
      {"HKLIP", {K::HBOS, K::kNN, K::LOF, K::INNE, K::PCA}, 10.0, 10.0},
      {"HKLIF", {K::HBOS, K::kNN, K::LOF, K::INNE, K::FeatureBagging}, 100.0, 100.0},
  };
  return presets;
}

std::optional<EnsembleSpec> find_preset(std::string_view name) {
  for (const auto& p : ensemble_presets()) {
    if (p.name.size() != name.size()) continue;
    if (std::equal(p.name.begin(), p.name.end(), name.begin(),
                   [](char a, char b) { return std::toupper(static_cast<unsigned char>(a)) == std::toupper(static_cast<unsigned char>(b)); }))
      return p;
  }
  return std::nullopt;
}

void validate_spec(const EnsembleSpec& spec) {
  if (spec.bases.empty()) throw ConfigError("ensemble " + spec.name + " has no base detectors");
  std::set<DetectorKind> seen(spec.bases.begin(), spec.bases.end());
  if (seen.size() != spec.bases.size()) throw ConfigError("ensemble " + spec.name + " repeats a base detector");
  if (!(spec.C > 0) || !(spec.gamma > 0)) throw ConfigError("ensemble " + spec.name + ": C and gamma must be positive");
}

Eigen::MatrixXd collect_base_scores(const std::vector<DetectorModel>& bases, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd S(X.rows(), static_cast<Eigen::Index>(bases.size()));
  for (std::size_t j = 0; j < bases.size(); ++j) S.col(static_cast<Eigen::Index>(j)) = bases[j].score_rows(X);
  return S;
}

Eigen::MatrixXd collect_base_scores(const std::vector<DetectorModel>& bases, const LabeledDataset& ds) {
  return collect_base_scores(bases, design_matrix(ds));
}

Eigen::VectorXd EnsembleModel::normalize(const Eigen::VectorXd& s) const {
  return ((s - norm_mean).array() / norm_sd.array()).matrix();
}

double EnsembleModel::score(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd s(static_cast<Eigen::Index>(bases.size()));
  for (std::size_t j = 0; j < bases.size(); ++j) s(static_cast<Eigen::Index>(j)) = bases[j].score(x);
  return machine.margin(normalize(s));
}

Eigen::VectorXd EnsembleModel::score_rows(const Eigen::MatrixXd& X) const {
  const Eigen::MatrixXd S = collect_base_scores(bases, X);
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = machine.margin(normalize(S.row(i).transpose()));
  return out;
}

EnsembleModel fit_ensemble(const EnsembleSpec& spec, std::vector<DetectorModel> bases, const Eigen::MatrixXd& Xval,
                           const std::vector<bool>& is_attack, std::uint64_t seed) {
  validate_spec(spec);
  if (bases.size() != spec.bases.size()) throw ConfigError("ensemble " + spec.name + ": base model count mismatch");
  for (std::size_t j = 0; j < bases.size(); ++j)
    if (bases[j].config.kind != spec.bases[j])
      throw ConfigError("ensemble " + spec.name + ": base " + std::to_string(j) + " is " +
                        std::string(detector_name(bases[j].config.kind)) + ", expected " +
                        std::string(detector_name(spec.bases[j])));
  const auto attacks = std::count(is_attack.begin(), is_attack.end(), true);
  if (attacks == 0 || attacks == static_cast<long>(is_attack.size()))
    throw FitError("ensemble " + spec.name +
                   " needs benign and attack rows in the validation split; a one-class validation set cannot train "
                   "the binary stacker");

  EnsembleModel m;
  m.spec = spec;
  m.bases = std::move(bases);
  const Eigen::MatrixXd S = collect_base_scores(m.bases, Xval);
  m.norm_mean = S.colwise().mean();
  m.norm_sd.resize(S.cols());
  for (Eigen::Index j = 0; j < S.cols(); ++j) {
    const double sd = std::sqrt((S.col(j).array() - m.norm_mean(j)).square().mean());
    m.norm_sd(j) = sd > 0 && std::isfinite(sd) ? sd : 1.0;
  }
  Eigen::MatrixXd U(S.rows(), S.cols());
  for (Eigen::Index i = 0; i < S.rows(); ++i) U.row(i) = m.normalize(S.row(i).transpose()).transpose();
  std::vector<int> y(is_attack.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = is_attack[i] ? 1 : -1;
  SvcOptions options;
  options.C = spec.C;
  options.gamma = spec.gamma;
  options.seed = seed;
  m.machine = fit_svc(U, y, options);
  return m;
}

EnsembleModel fit_ensemble(const EnsembleSpec& spec, std::vector<DetectorModel> bases,
                           const LabeledDataset& validation, std::uint64_t seed) {
  return fit_ensemble(spec, std::move(bases), design_matrix(validation), attack_mask(validation.labels), seed);
}

nlohmann::json ensemble_to_json(const EnsembleModel& m) {
  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : m.spec.bases) kinds.push_back(detector_name(k));
  nlohmann::json bases = nlohmann::json::array();
  for (const auto& b : m.bases) bases.push_back(detector_to_json(b));
  return {{"format", "pfad-ensemble"},
          {"version", 1},
          {"spec", {{"name", m.spec.name}, {"bases", kinds}, {"C", m.spec.C}, {"gamma", m.spec.gamma}}},
          {"norm_mean", detail::vector_json(m.norm_mean)},
          {"norm_sd", detail::vector_json(m.norm_sd)},
          {"machine", kernel_machine_to_json(m.machine)},
          {"threshold", m.threshold},
          {"base_models", bases}};
}

EnsembleModel ensemble_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "pfad-ensemble" || j.at("version").get<int>() != 1)
      throw SchemaError("not a version-1 ensemble container");
    EnsembleModel m;
    const auto& s = j.at("spec");
    m.spec.name = s.at("name").get<std::string>();
    for (const auto& k : s.at("bases")) {
      const auto kind = parse_detector(k.get<std::string>());
      if (!kind) throw SchemaError("unknown base detector " + k.get<std::string>());
      m.spec.bases.push_back(*kind);
    }
    m.spec.C = s.at("C").get<double>();
    m.spec.gamma = s.at("gamma").get<double>();
    m.norm_mean = detail::vector_from(j.at("norm_mean"));
    m.norm_sd = detail::vector_from(j.at("norm_sd"));
    m.machine = kernel_machine_from_json(j.at("machine"));
    m.threshold = j.at("threshold").get<double>();
    for (const auto& b : j.at("base_models")) m.bases.push_back(detector_from_json(b));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed ensemble container: ") + e.what());
  }
}

void save_ensemble(const EnsembleModel& model, const std::string& path) {
  const auto bytes = nlohmann::json::to_cbor(ensemble_to_json(model));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

EnsembleModel load_ensemble(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return ensemble_from_json(nlohmann::json::from_cbor(bytes));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

}  // namespace pfad
