#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>

#include "pfad/attack.hpp"
#include "pfad/run_config.hpp"

namespace pfad {

// Command-line values that take precedence over the run config.
struct Overrides {
  std::optional<std::uint64_t> seed;
  bool no_scale = false;
  std::optional<std::string> ensemble;
  std::optional<Algorithm> algorithm;
  std::optional<int> budget;
  std::optional<std::string> out;
  std::optional<int> rs_retries;
};

void apply_overrides(RunConfig& cfg, const Overrides& o);

// Feasible set, marginals and compliance rules per attack class for one
// pipeline variant. Classes with an empty J or no admissible marginal source
// are left out with a warning.
std::map<ClassLabel, ClassSetup> class_setups(const RunConfig& cfg, const PipelineModel& pm, const Splits& raw);

// Run directory layout:
//   config.json                 canonical config
//   data/                       schema.json and raw train/validation/test CSVs
//   <variant>/                  pipeline.json, drop_report.csv, transformed CSVs
//   <variant>/models/           <model>.cbor, <detector>.grid.json, index.json
//   reports/                    metrics, detection_matrix, evasion, tables.txt
//   reports/campaigns/          <variant>-<model>-<algorithm>.jsonl
// <variant> is "scaled" or "unscaled". Every command writes into
// run_directory(cfg) and returns it.
std::string cmd_synth(const RunConfig& cfg, std::ostream& log);
std::string cmd_preprocess(const RunConfig& cfg, std::ostream& log);
std::string cmd_train(const RunConfig& cfg, std::ostream& log);
std::string cmd_evaluate(const RunConfig& cfg, std::ostream& log);
std::string cmd_attack(const RunConfig& cfg, std::ostream& log);
// Re-reads the report files and writes reports/tables.txt.
std::string cmd_report(const RunConfig& cfg, std::ostream& log);

}  // namespace pfad
