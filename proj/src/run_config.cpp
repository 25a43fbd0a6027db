#include "pfad/run_config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "pfad/errors.hpp"
#include "pfad/ensemble.hpp"
#include "pfad/rng.hpp"

namespace pfad {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kTopKeys = {"seed",      "output_dir", "data",          "pipeline", "detectors",
                                        "ensembles", "attack",     "contamination", "report"};

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <typename T>
T get(const nlohmann::json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

std::string resolve_existing(const std::string& path, const std::string& base_dir, const std::string& what) {
  fs::path p(path);
  if (p.is_relative()) p = fs::path(base_dir) / p;
  p = p.lexically_normal();
  if (!fs::exists(p)) throw IoError(what + " not found: " + p.string());
  return p.string();
}

SourceSpec parse_source(const nlohmann::json& j, const std::string& base_dir) {
  check_keys(j, {"path", "filter", "labels", "first", "count"}, "data.splits source");
  SourceSpec s;
  s.path = resolve_existing(get<std::string>(j, "path", "source"), base_dir, "split source");
  if (j.contains("filter")) {
    const auto name = get<std::string>(j, "filter", "source");
    auto f = parse_label_filter(name);
    if (!f) throw ConfigError("unknown label filter '" + name + "'");
    s.filter = *f;
  }
  if (j.contains("labels"))
    for (const auto& l : j.at("labels")) {
      auto c = parse_class(l.get<std::string>());
      if (!c) throw ConfigError("unknown class label '" + l.get<std::string>() + "'");
      s.labels.push_back(*c);
    }
  if (j.contains("first")) s.first = get<std::size_t>(j, "first", "source");
  if (j.contains("count")) s.count = get<std::size_t>(j, "count", "source");
  return s;
}

std::vector<SourceSpec> parse_sources(const nlohmann::json& j, const std::string& key, const std::string& base_dir) {
  std::vector<SourceSpec> out;
  if (!j.contains(key)) return out;
  const auto& list = j.at(key);
  if (list.is_object()) {
    out.push_back(parse_source(list, base_dir));
  } else if (list.is_array()) {
    for (const auto& s : list) out.push_back(parse_source(s, base_dir));
  } else {
    throw ConfigError("data.splits." + key + " must be a source object or a list of them");
  }
  return out;
}

std::vector<std::string> parse_field_mapping(const nlohmann::json& j, const std::string& base_dir) {
  nlohmann::json doc = j;
  if (j.is_string()) {
    const auto path = resolve_existing(j.get<std::string>(), base_dir, "field mapping");
    std::ifstream in(path);
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("field mapping " + path + ": " + e.what());
    }
    if (doc.is_object() && doc.contains("fields")) doc = doc.at("fields");
  }
  if (!doc.is_array()) throw ConfigError("pipeline.field_mapping must be a list of feature names or a file holding one");
  std::vector<std::string> out;
  for (const auto& f : doc) out.push_back(f.get<std::string>());
  return out;
}

DetectorEntry parse_detector_entry(const nlohmann::json& j) {
  DetectorEntry e;
  const std::string name = j.is_string() ? j.get<std::string>() : get<std::string>(j, "kind", "detectors[]");
  auto kind = parse_detector(name);
  if (!kind) throw ConfigError("unknown detector '" + name + "'");
  e.kind = *kind;
  if (j.is_string()) return e;
  check_keys(j, {"kind", "hyperparameters", "grid", "contamination"}, "detector " + name);
  if (j.contains("hyperparameters")) e.hyper = get<Hyperparameters>(j, "hyperparameters", name);
  if (j.contains("grid")) e.grid = get<std::map<std::string, std::vector<double>>>(j, "grid", name);
  if (j.contains("contamination")) e.contamination = get<double>(j, "contamination", name);
  // Unknown hyperparameter names fail here rather than at train time.
  validate_config(make_config(e.kind, e.hyper, e.contamination.value_or(0.01)));
  for (const auto& [k, values] : e.grid) {
    if (values.empty()) throw ConfigError("grid for " + name + "." + k + " is empty");
    Hyperparameters probe = e.hyper;
    probe[k] = values.front();
    (void)make_config(e.kind, probe);
  }
  return e;
}

void parse_attack(const nlohmann::json& j, AttackSettings& a, const std::string& base_dir) {
  check_keys(j,
             {"algorithms", "budget", "popsize", "differential_weight", "recombination_ratio", "mutation_rate",
              "rs_retries", "j_config", "marginals", "targets", "trace", "max_samples"},
             "attack");
  if (j.contains("algorithms")) {
    a.algorithms.clear();
    for (const auto& s : j.at("algorithms")) {
      auto alg = parse_algorithm(s.get<std::string>());
      if (!alg) throw ConfigError("unknown attack algorithm '" + s.get<std::string>() + "'");
      a.algorithms.push_back(*alg);
    }
  }
  if (j.contains("budget")) a.budget = get<int>(j, "budget", "attack");
  if (j.contains("popsize")) a.popsize = get<int>(j, "popsize", "attack");
  if (j.contains("differential_weight")) a.differential_weight = get<double>(j, "differential_weight", "attack");
  if (j.contains("recombination_ratio")) a.recombination_ratio = get<double>(j, "recombination_ratio", "attack");
  if (j.contains("mutation_rate") && !j.at("mutation_rate").is_null())
    a.mutation_rate = get<double>(j, "mutation_rate", "attack");
  if (j.contains("rs_retries")) a.rs_retries = get<int>(j, "rs_retries", "attack");
  if (j.contains("j_config"))
    a.j_config = resolve_existing(get<std::string>(j, "j_config", "attack"), base_dir, "J config");
  if (j.contains("marginals")) {
    const auto m = get<std::string>(j, "marginals", "attack");
    if (m == "attack") a.marginals = MarginalSource::attack;
    else if (m == "benign") a.marginals = MarginalSource::benign;
    else throw ConfigError("attack.marginals must be \"attack\" or \"benign\"");
  }
  if (j.contains("targets")) a.targets = get<std::vector<std::string>>(j, "targets", "attack");
  if (j.contains("trace")) a.trace = get<bool>(j, "trace", "attack");
  if (j.contains("max_samples") && !j.at("max_samples").is_null())
    a.max_samples = get<std::size_t>(j, "max_samples", "attack");
}

nlohmann::ordered_json source_json(const SourceSpec& s) {
  nlohmann::ordered_json j;
  j["path"] = s.path;
  j["filter"] = label_filter_name(s.filter);
  if (!s.labels.empty()) {
    j["labels"] = nlohmann::ordered_json::array();
    for (auto c : s.labels) j["labels"].push_back(class_name(c));
  }
  j["first"] = s.first;
  if (s.count) j["count"] = *s.count;
  return j;
}

}  // namespace

std::string_view variant_name(bool scaled) { return scaled ? "scaled" : "unscaled"; }

RunConfig parse_run_config(const nlohmann::json& j, const std::string& base_dir) {
  check_keys(j, kTopKeys, "run config");
  RunConfig cfg;
  if (j.contains("seed")) cfg.seed = get<std::uint64_t>(j, "seed", "run config");
  if (j.contains("output_dir")) {
    fs::path p(get<std::string>(j, "output_dir", "run config"));
    if (p.is_relative()) p = fs::path(base_dir) / p;
    cfg.output_dir = p.lexically_normal().string();
  }
  if (j.contains("contamination")) cfg.contamination = get<double>(j, "contamination", "run config");

  if (j.contains("data")) {
    const auto& d = j.at("data");
    check_keys(d, {"schema", "splits", "synth"}, "data");
    if (d.contains("schema")) cfg.schema_path = resolve_existing(get<std::string>(d, "schema", "data"), base_dir, "schema");
    if (d.contains("splits") && d.contains("synth")) throw ConfigError("data.splits and data.synth are exclusive");
    if (d.contains("splits")) {
      const auto& s = d.at("splits");
      check_keys(s, {"train", "validation", "test", "label_column"}, "data.splits");
      SplitSpec spec;
      spec.train = parse_sources(s, "train", base_dir);
      spec.validation = parse_sources(s, "validation", base_dir);
      spec.test = parse_sources(s, "test", base_dir);
      if (s.contains("label_column")) spec.label_column = get<std::string>(s, "label_column", "data.splits");
      if (spec.train.empty() || spec.test.empty()) throw ConfigError("data.splits needs train and test sources");
      cfg.splits = spec;
    }
    if (d.contains("synth")) {
      const auto& s = d.at("synth");
      check_keys(s, {"scale", "noise_scale", "missing_rate", "tcp_fraction"}, "data.synth");
      if (s.contains("scale")) cfg.synth_scale = get<double>(s, "scale", "data.synth");
      if (s.contains("noise_scale")) cfg.synth_noise = get<double>(s, "noise_scale", "data.synth");
      if (s.contains("missing_rate")) cfg.synth_missing_rate = get<double>(s, "missing_rate", "data.synth");
      if (s.contains("tcp_fraction")) cfg.synth_tcp_fraction = get<double>(s, "tcp_fraction", "data.synth");
      if (!(cfg.synth_scale > 0)) throw ConfigError("data.synth.scale must be > 0");
    }
  }

  if (j.contains("pipeline")) {
    const auto& p = j.at("pipeline");
    check_keys(p, {"scaling", "environment_patterns", "field_mapping", "imputer"}, "pipeline");
    if (p.contains("scaling")) {
      const auto& s = p.at("scaling");
      if (s.is_boolean()) cfg.scaling = {s.get<bool>()};
      else if (s == "both") cfg.scaling = {true, false};
      else throw ConfigError("pipeline.scaling must be true, false or \"both\"");
    }
    if (p.contains("environment_patterns"))
      cfg.pipeline.environment_patterns = get<std::vector<std::string>>(p, "environment_patterns", "pipeline");
    if (p.contains("field_mapping")) cfg.pipeline.field_mapping = parse_field_mapping(p.at("field_mapping"), base_dir);
    if (p.contains("imputer")) {
      const auto& im = p.at("imputer");
      check_keys(im, {"max_rounds", "tol"}, "pipeline.imputer");
      if (im.contains("max_rounds")) cfg.pipeline.imputer_max_rounds = get<int>(im, "max_rounds", "pipeline.imputer");
      if (im.contains("tol")) cfg.pipeline.imputer_tol = get<double>(im, "tol", "pipeline.imputer");
    }
  }

  if (j.contains("detectors")) {
    if (!j.at("detectors").is_array()) throw ConfigError("detectors must be a list");
    std::set<DetectorKind> seen;
    for (const auto& d : j.at("detectors")) {
      auto e = parse_detector_entry(d);
      if (!seen.insert(e.kind).second) throw ConfigError("detector " + std::string(detector_name(e.kind)) + " listed twice");
      cfg.detectors.push_back(std::move(e));
    }
  } else {
    for (auto k : kAllDetectors) cfg.detectors.push_back({k, {}, {}, std::nullopt});
  }

  if (j.contains("ensembles")) {
    cfg.ensembles = get<std::vector<std::string>>(j, "ensembles", "run config");
    for (const auto& name : cfg.ensembles)
      if (!find_preset(name)) throw ConfigError("unknown ensemble preset '" + name + "'");
  } else {
    for (const auto& spec : ensemble_presets()) cfg.ensembles.push_back(spec.name);
  }

  if (j.contains("attack")) parse_attack(j.at("attack"), cfg.attack, base_dir);

  if (j.contains("report")) {
    const auto& r = j.at("report");
    check_keys(r, {"format"}, "report");
    const auto f = get<std::string>(r, "format", "report");
    if (f == "json") cfg.format = ReportFormat::json;
    else if (f == "csv") cfg.format = ReportFormat::csv;
    else if (f == "both") cfg.format = ReportFormat::both;
    else throw ConfigError("report.format must be json, csv or both");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open run config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("run config " + path + ": " + e.what());
  }
  return parse_run_config(j, fs::path(path).parent_path().string().empty() ? "." : fs::path(path).parent_path().string());
}

nlohmann::ordered_json run_config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  auto& data = j["data"];
  if (cfg.schema_path) data["schema"] = *cfg.schema_path;
  if (cfg.splits) {
    auto& s = data["splits"];
    for (const auto& [key, list] : {std::pair{"train", &cfg.splits->train}, std::pair{"validation", &cfg.splits->validation},
                                    std::pair{"test", &cfg.splits->test}}) {
      s[key] = nlohmann::ordered_json::array();
      for (const auto& src : *list) s[key].push_back(source_json(src));
    }
    s["label_column"] = cfg.splits->label_column;
  } else {
    data["synth"] = {{"scale", cfg.synth_scale},
                     {"noise_scale", cfg.synth_noise},
                     {"missing_rate", cfg.synth_missing_rate},
                     {"tcp_fraction", cfg.synth_tcp_fraction}};
  }
  auto& p = j["pipeline"];
  if (cfg.scaling.size() == 2) p["scaling"] = "both";
  else p["scaling"] = static_cast<bool>(cfg.scaling.front());
  p["environment_patterns"] = cfg.pipeline.environment_patterns;
  if (cfg.pipeline.field_mapping) p["field_mapping"] = *cfg.pipeline.field_mapping;
  p["imputer"] = {{"max_rounds", cfg.pipeline.imputer_max_rounds}, {"tol", cfg.pipeline.imputer_tol}};

  j["contamination"] = cfg.contamination;
  j["detectors"] = nlohmann::ordered_json::array();
  for (const auto& d : cfg.detectors) {
    nlohmann::ordered_json e;
    e["kind"] = detector_name(d.kind);
    e["hyperparameters"] = d.hyper;
    e["grid"] = d.grid;
    if (d.contamination) e["contamination"] = *d.contamination;
    j["detectors"].push_back(std::move(e));
  }
  j["ensembles"] = cfg.ensembles;

  auto& a = j["attack"];
  a["algorithms"] = nlohmann::ordered_json::array();
  for (auto alg : cfg.attack.algorithms) a["algorithms"].push_back(algorithm_name(alg));
  a["budget"] = cfg.attack.budget;
  a["popsize"] = cfg.attack.popsize;
  a["differential_weight"] = cfg.attack.differential_weight;
  a["recombination_ratio"] = cfg.attack.recombination_ratio;
  a["mutation_rate"] = cfg.attack.mutation_rate ? nlohmann::ordered_json(*cfg.attack.mutation_rate) : nullptr;
  a["rs_retries"] = cfg.attack.rs_retries;
  if (cfg.attack.j_config) a["j_config"] = *cfg.attack.j_config;
  a["marginals"] = cfg.attack.marginals == MarginalSource::attack ? "attack" : "benign";
  a["targets"] = cfg.attack.targets;
  a["trace"] = cfg.attack.trace;
  a["max_samples"] = cfg.attack.max_samples ? nlohmann::ordered_json(*cfg.attack.max_samples) : nullptr;

  j["report"] = {{"format", cfg.format == ReportFormat::json ? "json" : cfg.format == ReportFormat::csv ? "csv" : "both"}};
  return j;
}

std::string run_directory(const RunConfig& cfg) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(run_config_to_json(cfg).dump())));
  return (fs::path(cfg.output_dir) / ("run-" + std::string(hex))).string();
}

}  // namespace pfad
