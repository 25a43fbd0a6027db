#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pfad/commands.hpp"
#include "pfad/errors.hpp"
#include "pfad/run_config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Anomaly detection and constrained evasion on PFCP traffic"};
  app.require_subcommand(1);

  std::string config_path;
  pfad::Overrides o;
  std::uint64_t seed = 0;
  std::string algorithm, ensemble, out;
  int budget = 0, rs_retries = 0;
  app.add_option("--config", config_path, "run config (JSON)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  app.add_flag("--no-scale", o.no_scale, "disable robust scaling");
  auto* ens_opt = app.add_option("--ensemble", ensemble, "train only this ensemble preset");
  auto* alg_opt = app.add_option("--algorithm", algorithm, "rs, ga-de or ga-es");
  auto* budget_opt = app.add_option("--budget", budget, "oracle queries per sample")->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--out", out, "output directory");
  auto* retries_opt = app.add_option("--rs-retries", rs_retries, "candidates drawn by random search")
                          ->check(CLI::PositiveNumber);

  const char* names[] = {"synth", "preprocess", "train", "evaluate", "attack", "report", "run"};
  const char* help[] = {"write the synthetic benchmark splits",
                        "fit the preprocessing pipeline and transform the splits",
                        "fit detectors and ensembles",
                        "score the test split and write metrics",
                        "run evasion campaigns against the trained models",
                        "render the report tables",
                        "preprocess, train, evaluate, attack and report in one go"};
  for (int i = 0; i < 7; ++i) app.add_subcommand(names[i], help[i]);

  CLI11_PARSE(app, argc, argv);

  try {
    pfad::RunConfig cfg = config_path.empty() ? pfad::parse_run_config(nlohmann::json::object())
                                              : pfad::load_run_config(config_path);
    if (*seed_opt) o.seed = seed;
    if (*ens_opt) o.ensemble = ensemble;
    if (*alg_opt) {
      auto a = pfad::parse_algorithm(algorithm);
      if (!a) throw pfad::ConfigError("unknown algorithm '" + algorithm + "'");
      o.algorithm = *a;
    }
    if (*budget_opt) o.budget = budget;
    if (*out_opt) o.out = out;
    if (*retries_opt) o.rs_retries = rs_retries;
    pfad::apply_overrides(cfg, o);

    const std::string cmd = app.get_subcommands().front()->get_name();
    std::string run;
    if (cmd == "synth") run = pfad::cmd_synth(cfg, std::cerr);
    if (cmd == "preprocess" || cmd == "run") run = pfad::cmd_preprocess(cfg, std::cerr);
    if (cmd == "train" || cmd == "run") run = pfad::cmd_train(cfg, std::cerr);
    if (cmd == "evaluate" || cmd == "run") run = pfad::cmd_evaluate(cfg, std::cerr);
    if (cmd == "attack" || cmd == "run") run = pfad::cmd_attack(cfg, std::cerr);
    if (cmd == "report" || cmd == "run") run = pfad::cmd_report(cfg, std::cout);
    std::cout << run << '\n';
  } catch (const pfad::Error& e) {
    std::cerr << "error: code=" << e.code() << " family=" << pfad::family_name(e.family()) << " message=" << e.what()
              << '\n';
    return pfad::exit_code(e.family());
  }
  return 0;
}
