#include "pfad/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <variant>

#include "pfad/csv.hpp"
#include "pfad/ensemble.hpp"
#include "pfad/errors.hpp"
#include "pfad/eval.hpp"
#include "pfad/log.hpp"
#include "pfad/oracle.hpp"
#include "pfad/rng.hpp"

namespace pfad {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSplitNames[] = {"train", "validation", "test"};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failure on " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void make_dirs(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
}

fs::path prepare_run(const RunConfig& cfg) {
  const fs::path run(run_directory(cfg));
  make_dirs(run);
  write_text(run / "config.json", run_config_to_json(cfg).dump(2) + "\n");
  return run;
}

FeatureSchema input_schema(const RunConfig& cfg) {
  return cfg.schema_path ? load_schema(*cfg.schema_path) : pfcp_schema();
}

Splits build_data(const RunConfig& cfg, const FeatureSchema& schema) {
  if (cfg.splits) return build_splits(*cfg.splits, schema);
  SynthBenchmark bench;
  bench.counts = scaled_counts(reference_counts(), cfg.synth_scale);
  bench.seed = cfg.seed;
  bench.noise_scale = cfg.synth_noise;
  bench.missing_rate = cfg.synth_missing_rate;
  bench.tcp_fraction = cfg.synth_tcp_fraction;
  return synth_splits(bench, schema);
}

void write_data(const fs::path& run, const Splits& s, const RunConfig& cfg, std::ostream& log) {
  const fs::path data = run / "data";
  make_dirs(data);
  save_schema(s.train.schema, (data / "schema.json").string());
  const LabeledDataset* parts[] = {&s.train, &s.validation, &s.test};
  for (int i = 0; i < 3; ++i) {
    write_dataset(*parts[i], (data / (std::string(kSplitNames[i]) + ".csv")).string(), {{"seed", cfg.seed}});
    log << kSplitNames[i] << ": " << parts[i]->size() << " rows\n";
  }
}

// Splits as materialized by the preprocess stage.
Splits load_data(const fs::path& run) {
  const fs::path data = run / "data";
  if (!fs::exists(data / "schema.json")) throw IoError("no data in " + run.string() + "; run preprocess first");
  const FeatureSchema schema = load_schema((data / "schema.json").string());
  Splits s;
  LabeledDataset* parts[] = {&s.train, &s.validation, &s.test};
  for (int i = 0; i < 3; ++i) *parts[i] = load_csv((data / (std::string(kSplitNames[i]) + ".csv")).string(), schema);
  return s;
}

PipelineModel load_variant_pipeline(const fs::path& run, bool scaled) {
  const fs::path p = run / variant_name(scaled) / "pipeline.json";
  if (!fs::exists(p)) throw IoError("no pipeline at " + p.string() + "; run preprocess first");
  return load_pipeline(p.string());
}

struct TrainedModel {
  std::string name;
  bool ensemble = false;
  std::string file;
};

std::vector<TrainedModel> load_index(const fs::path& models) {
  const fs::path p = models / "index.json";
  if (!fs::exists(p)) throw IoError("no model index at " + p.string() + "; run train first");
  const auto j = read_json(p);
  std::vector<TrainedModel> out;
  for (const auto& e : j.at("models")) {
    if (!e.contains("file")) continue;
    out.push_back({e.at("name").get<std::string>(), e.at("type").get<std::string>() == "ensemble",
                   e.at("file").get<std::string>()});
  }
  return out;
}

// Either kind of fitted model behind one scoring interface.
struct LoadedModel {
  std::string name;
  std::variant<DetectorModel, EnsembleModel> model;

  Eigen::VectorXd score_rows(const Eigen::MatrixXd& X) const {
    return std::visit([&](const auto& m) { return m.score_rows(X); }, model);
  }
  double threshold() const {
    return std::visit([](const auto& m) { return m.threshold; }, model);
  }
  std::unique_ptr<ScoreOracle> oracle(const PipelineModel& pm) const {
    if (const auto* d = std::get_if<DetectorModel>(&model)) return std::make_unique<DetectorOracle>(pm, *d);
    return std::make_unique<EnsembleOracle>(pm, std::get<EnsembleModel>(model));
  }
};

std::optional<LoadedModel> load_model(const fs::path& models, const TrainedModel& t) {
  const fs::path p = models / t.file;
  if (!fs::exists(p)) {
    warn("model file " + p.string() + " is missing; skipping " + t.name);
    return std::nullopt;
  }
  if (t.ensemble) return LoadedModel{t.name, load_ensemble(p.string())};
  return LoadedModel{t.name, load_detector(p.string())};
}

DetectorConfig detector_config(const RunConfig& cfg, const DetectorEntry& e) {
  const std::string name(detector_name(e.kind));
  return make_config(e.kind, e.hyper, e.contamination.value_or(cfg.contamination),
                     derive_seed(cfg.seed, "detector/" + name));
}

std::map<ClassLabel, FeasibleSet> feasible_sets(const RunConfig& cfg, const PipelineModel& pm) {
  if (cfg.attack.j_config) return load_j_config(*cfg.attack.j_config, pm.input_schema);
  // Without a J file the attacker may touch every feature the detector sees,
  // except the fields that carry the attack.
  std::map<ClassLabel, FeasibleSet> out;
  for (auto c : kAttackClasses) {
    const auto spec = default_compliance(c);
    FeasibleSet J;
    for (const auto& name : pm.kept_features)
      if (!spec.protected_fields.count(name)) J.indices.push_back(pm.input_schema.index_of(name));
    std::sort(J.indices.begin(), J.indices.end());
    out[c] = std::move(J);
  }
  return out;
}

}  // namespace

std::map<ClassLabel, ClassSetup> class_setups(const RunConfig& cfg, const PipelineModel& pm, const Splits& raw) {
  std::map<ClassLabel, ClassSetup> setup;
  for (auto& [c, J] : feasible_sets(cfg, pm)) {
    if (!is_attack(c)) continue;
    if (J.indices.empty()) {
      warn("empty J for " + std::string(class_name(c)) + "; class skipped");
      continue;
    }
    ClassSetup cs;
    cs.compliance = default_compliance(c);
    check_disjoint(J, cs.compliance, pm.input_schema);
    LabeledDataset source = cfg.attack.marginals == MarginalSource::attack ? raw.validation.filter(c) : raw.train;
    source.schema = pm.input_schema;
    try {
      cs.marginals = estimate_marginals(source, J);
    } catch (const MarginalsError& e) {
      warn(std::string(class_name(c)) + ": " + e.what() + "; class skipped");
      continue;
    }
    cs.J = std::move(J);
    setup.emplace(c, std::move(cs));
  }
  return setup;
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.no_scale) cfg.scaling = {false};
  if (o.ensemble) {
    if (!find_preset(*o.ensemble)) throw ConfigError("unknown ensemble preset '" + *o.ensemble + "'");
    cfg.ensembles = {find_preset(*o.ensemble)->name};
  }
  if (o.algorithm) cfg.attack.algorithms = {*o.algorithm};
  if (o.budget) cfg.attack.budget = *o.budget;
  if (o.out) cfg.output_dir = *o.out;
  if (o.rs_retries) cfg.attack.rs_retries = *o.rs_retries;
}

std::string cmd_synth(const RunConfig& cfg, std::ostream& log) {
  if (cfg.splits) throw ConfigError("synth needs a config without data.splits");
  const fs::path run = prepare_run(cfg);
  write_data(run, build_data(cfg, input_schema(cfg)), cfg, log);
  return run.string();
}

std::string cmd_preprocess(const RunConfig& cfg, std::ostream& log) {
  const fs::path run = prepare_run(cfg);
  const Splits raw = build_data(cfg, input_schema(cfg));
  write_data(run, raw, cfg, log);
  for (bool scaled : cfg.scaling) {
    PipelineOptions opt = cfg.pipeline;
    opt.scaling = scaled;
    const PipelineModel pm = fit_pipeline(raw.train, opt);
    const fs::path dir = run / variant_name(scaled);
    make_dirs(dir);
    save_pipeline(pm, (dir / "pipeline.json").string());
    std::string drops = "feature,reason,detail\n";
    for (const auto& d : pm.drop_report) drops += join_csv({d.feature, d.reason, d.detail}) + "\n";
    write_text(dir / "drop_report.csv", drops);
    const LabeledDataset* parts[] = {&raw.train, &raw.validation, &raw.test};
    for (int i = 0; i < 3; ++i)
      write_dataset(transform(pm, *parts[i]), (dir / (std::string(kSplitNames[i]) + ".csv")).string());
    log << variant_name(scaled) << ": " << pm.kept_features.size() << " features kept, " << pm.drop_report.size()
        << " dropped\n";
  }
  return run.string();
}

std::string cmd_train(const RunConfig& cfg, std::ostream& log) {
  const fs::path run = prepare_run(cfg);
  const Splits raw = load_data(run);
  for (bool scaled : cfg.scaling) {
    const PipelineModel pm = load_variant_pipeline(run, scaled);
    const LabeledDataset train = transform(pm, raw.train);
    const LabeledDataset validation = transform(pm, raw.validation);
    const fs::path models = run / variant_name(scaled) / "models";
    make_dirs(models);

    nlohmann::ordered_json index;
    index["models"] = nlohmann::ordered_json::array();
    std::map<DetectorKind, DetectorModel> fitted;
    for (const auto& e : cfg.detectors) {
      const std::string name(detector_name(e.kind));
      nlohmann::ordered_json entry{{"name", name}, {"type", "detector"}};
      try {
        DetectorConfig dc = detector_config(cfg, e);
        if (!e.grid.empty()) {
          const GridResult gr = grid_search(dc, e.grid, train, validation);
          nlohmann::ordered_json glog = nlohmann::ordered_json::array();
          for (const auto& p : gr.log) {
            nlohmann::ordered_json row{{"hyperparameters", p.hyper}, {"f1", p.f1}};
            if (!p.error.empty()) row["error"] = p.error;
            glog.push_back(std::move(row));
          }
          write_text(models / (name + ".grid.json"), glog.dump(2) + "\n");
          dc = gr.best;
        }
        DetectorModel m = fit(dc, train);
        save_detector(m, (models / (name + ".cbor")).string());
        entry["file"] = name + ".cbor";
        entry["threshold"] = m.threshold;
        fitted.emplace(e.kind, std::move(m));
        log << variant_name(scaled) << ": trained " << name << "\n";
      } catch (const FitError& err) {
        entry["error"] = err.what();
        warn(name + ": " + err.what());
      } catch (const GridSearchError& err) {
        entry["error"] = err.what();
        warn(name + ": " + err.what());
      }
      index["models"].push_back(std::move(entry));
    }

    for (const auto& ename : cfg.ensembles) {
      const EnsembleSpec spec = *find_preset(ename);
      nlohmann::ordered_json entry{{"name", spec.name}, {"type", "ensemble"}};
      try {
        std::vector<DetectorModel> bases;
        for (auto k : spec.bases) {
          auto it = fitted.find(k);
          if (it == fitted.end()) {
            const DetectorEntry def{k, {}, {}, std::nullopt};
            it = fitted.emplace(k, fit(detector_config(cfg, def), train)).first;
          }
          bases.push_back(it->second);
        }
        EnsembleModel m = fit_ensemble(spec, std::move(bases), validation, derive_seed(cfg.seed, "ensemble/" + spec.name));
        save_ensemble(m, (models / (spec.name + ".cbor")).string());
        entry["file"] = spec.name + ".cbor";
        entry["threshold"] = m.threshold;
        log << variant_name(scaled) << ": trained " << spec.name << "\n";
      } catch (const FitError& err) {
        entry["error"] = err.what();
        warn(spec.name + ": " + err.what());
      }
      index["models"].push_back(std::move(entry));
    }
    write_text(models / "index.json", index.dump(2) + "\n");
  }
  return run.string();
}

std::string cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  const fs::path run = prepare_run(cfg);
  const Splits raw = load_data(run);
  Report report;
  for (bool scaled : cfg.scaling) {
    const PipelineModel pm = load_variant_pipeline(run, scaled);
    const LabeledDataset test = transform(pm, raw.test);
    const Eigen::MatrixXd X = design_matrix(test);
    const auto mask = attack_mask(test.labels);
    const fs::path models = run / variant_name(scaled) / "models";
    for (const auto& t : load_index(models)) {
      const auto m = load_model(models, t);
      if (!m) continue;
      const Eigen::VectorXd s = m->score_rows(X);
      const auto tm = threshold_metrics(s, mask, m->threshold());
      report.metrics.push_back({t.name, scaled, auc(s, mask), tm.precision, tm.recall, tm.f1});
      std::vector<bool> flagged(static_cast<std::size_t>(s.size()));
      for (Eigen::Index i = 0; i < s.size(); ++i) flagged[static_cast<std::size_t>(i)] = is_anomalous(s(i), m->threshold());
      report.detection.push_back(detection_row(t.name, scaled, flagged, test.labels));
      log << variant_name(scaled) << ": " << t.name << " F1 " << format_fixed(tm.f1) << "\n";
    }
  }
  emit_report(report, (run / "reports").string(), cfg.format);
  return run.string();
}

std::string cmd_attack(const RunConfig& cfg, std::ostream& log) {
  const fs::path run = prepare_run(cfg);
  const Splits raw = load_data(run);
  const fs::path campaigns = run / "reports" / "campaigns";
  make_dirs(campaigns);

  std::vector<OutcomeSummary> outcomes;
  std::vector<EvasionRow> groups;
  for (bool scaled : cfg.scaling) {
    const PipelineModel pm = load_variant_pipeline(run, scaled);
    const auto setup = class_setups(cfg, pm, raw);
    LabeledDataset samples = raw.test;
    samples.schema = pm.input_schema;
    if (cfg.attack.max_samples) {
      std::vector<std::size_t> keep;
      for (std::size_t i = 0; i < samples.size() && keep.size() < *cfg.attack.max_samples; ++i)
        if (is_attack(samples.labels[i])) keep.push_back(i);
      samples = samples.subset(keep);
    }

    const fs::path models = run / variant_name(scaled) / "models";
    for (const auto& t : load_index(models)) {
      if (!cfg.attack.targets.empty() &&
          std::find(cfg.attack.targets.begin(), cfg.attack.targets.end(), t.name) == cfg.attack.targets.end())
        continue;
      const auto m = load_model(models, t);
      if (!m) continue;
      const auto oracle = m->oracle(pm);
      for (auto alg : cfg.attack.algorithms) {
        AttackConfig ac;
        ac.algorithm = alg;
        ac.budget = cfg.attack.budget;
        ac.popsize = cfg.attack.popsize;
        ac.differential_weight = cfg.attack.differential_weight;
        ac.recombination_ratio = cfg.attack.recombination_ratio;
        ac.mutation_rate = cfg.attack.mutation_rate;
        ac.rs_retries = cfg.attack.rs_retries;
        ac.seed = derive_seed(cfg.seed, "attack");
        ac.record_trace = cfg.attack.trace;
        validate_attack_config(ac);

        const Campaign camp = run_campaign(*oracle, samples, setup, ac);
        std::string lines;
        std::size_t evaded = 0;
        for (const auto& o : camp.outcomes) {
          lines += outcome_json(o, pm.input_schema, t.name, alg, scaled, cfg.attack.trace).dump() + "\n";
          outcomes.push_back({t.name, std::string(algorithm_name(alg)), scaled, o.evaded});
          evaded += o.evaded;
        }
        write_text(campaigns / (std::string(variant_name(scaled)) + "-" + t.name + "-" +
                                std::string(algorithm_name(alg)) + ".jsonl"),
                   lines);
        groups.push_back({t.name, std::string(algorithm_name(alg)), scaled, 0, 0});
        log << variant_name(scaled) << ": " << t.name << " " << algorithm_name(alg) << " evaded " << evaded << "/"
            << camp.outcomes.size() << "\n";
      }
    }
  }
  Report report;
  report.evasion = evasion_table(outcomes, groups);
  emit_report(report, (run / "reports").string(), cfg.format);
  return run.string();
}

std::string cmd_report(const RunConfig& cfg, std::ostream& log) {
  const fs::path run(run_directory(cfg));
  const fs::path reports = run / "reports";
  if (!fs::exists(reports)) throw IoError("no reports in " + run.string() + "; run evaluate or attack first");
  const std::string tables = render_tables(load_report(reports.string()));
  write_text(reports / "tables.txt", tables);
  log << tables;
  return run.string();
}

}  // namespace pfad
