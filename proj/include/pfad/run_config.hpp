#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pfad/attack.hpp"
#include "pfad/corpus.hpp"
#include "pfad/detectors.hpp"
#include "pfad/eval.hpp"
#include "pfad/preprocess.hpp"
#include "pfad/synth.hpp"

namespace pfad {

struct DetectorEntry {
  DetectorKind kind = DetectorKind::HBOS;
  Hyperparameters hyper;
  std::map<std::string, std::vector<double>> grid;
  std::optional<double> contamination;
};

enum class MarginalSource { attack, benign };

struct AttackSettings {
  std::vector<Algorithm> algorithms = {Algorithm::RS, Algorithm::GA_DE, Algorithm::GA_ES};
  int budget = 100;
  int popsize = 20;
  double differential_weight = 0.5;
  double recombination_ratio = 0.9;
  std::optional<double> mutation_rate;
  int rs_retries = 1;
  std::optional<std::string> j_config;  // absolute path
  // attack: per-class validation rows; benign: the training split.
  MarginalSource marginals = MarginalSource::attack;
  std::vector<std::string> targets;  // empty: every trained model
  bool trace = false;
  std::optional<std::size_t> max_samples;
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::string output_dir = "runs";
  std::optional<std::string> schema_path;  // built-in PFCP schema when unset
  std::optional<SplitSpec> splits;         // synthetic benchmark when unset
  double synth_scale = 1.0;
  double synth_noise = 1.0;
  double synth_missing_rate = 0.01;
  double synth_tcp_fraction = 0.0;
  std::vector<bool> scaling = {true};  // one pipeline variant per entry
  PipelineOptions pipeline;
  std::vector<DetectorEntry> detectors;
  std::vector<std::string> ensembles;
  double contamination = 0.01;
  AttackSettings attack;
  ReportFormat format = ReportFormat::both;
};

// Relative paths resolve against base_dir. Throws ConfigError on malformed
// documents and IoError when a referenced file does not exist.
RunConfig parse_run_config(const nlohmann::json& j, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

// Canonical form; output_dir is left out so the run directory depends only on
// what is computed.
nlohmann::ordered_json run_config_to_json(const RunConfig& cfg);
// <output_dir>/run-<16 hex digits of the canonical form's hash>.
std::string run_directory(const RunConfig& cfg);

std::string_view variant_name(bool scaled);

}  // namespace pfad
