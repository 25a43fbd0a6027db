// Acceptance run: one PASS/FAIL/SKIP line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pfad/attack.hpp"
#include "pfad/commands.hpp"
#include "pfad/corpus.hpp"
#include "pfad/detectors.hpp"
#include "pfad/ensemble.hpp"
#include "pfad/errors.hpp"
#include "pfad/eval.hpp"
#include "pfad/log.hpp"
#include "pfad/oracle.hpp"
#include "pfad/preprocess.hpp"
#include "pfad/rng.hpp"
#include "pfad/run_config.hpp"
#include "pfad/synth.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace pfad;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and limits.
constexpr std::uint64_t kSeed = 42;
constexpr double kOracleTol = 1e-9;
constexpr double kScalerTol = 1e-9;
constexpr double kC1Seconds = 10;
constexpr double kC2Seconds = 5;
constexpr double kC4Seconds = 120;
constexpr double kC6Seconds = 300;
constexpr double kMinF1 = 0.90;
constexpr double kEnsembleSlack = 0.01;
constexpr std::size_t kMinCampaignSamples = 500;
constexpr int kQueryBudget = 100;
constexpr double kMaxRsEvasion = 0.05;
constexpr double kMinDeEvasion = 0.90;
constexpr double kEsGap = 0.10;
constexpr std::size_t kReferenceIp = 4, kReferenceUdp = 1, kReferencePfcp = 28;

enum class Status { pass, fail, skip };

struct Result {
  Status status = Status::pass;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int decimals = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

// Failure notes accumulate; the criterion passes when none were recorded.
struct Check {
  std::vector<std::string> failures;
  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  Result result(const std::string& summary) const {
    if (failures.empty()) return {Status::pass, summary};
    std::string d = summary;
    for (std::size_t i = 0; i < failures.size() && i < 5; ++i) d += "; " + failures[i];
    if (failures.size() > 5) d += "; ... " + std::to_string(failures.size() - 5) + " more";
    return {Status::fail, d};
  }
};

// Type-7 quantile, written out here so the scaler check does not reuse the library's.
double quantile7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

const Splits& benchmark() {
  static const Splits splits = [] {
    SynthBenchmark bench;
    bench.seed = kSeed;
    return synth_splits(bench, pfcp_schema());
  }();
  return splits;
}

DetectorConfig detector_config(DetectorKind k) {
  return make_config(k, {}, 0.01, derive_seed(kSeed, std::string("detector/") + std::string(detector_name(k))));
}

// ---------------------------------------------------------------- criterion 1

Result criterion1() {
  Timer timer;
  Check c;
  int compared = 0;
  for (int t = 0; t < 20; ++t) {
    Rng rng(derive_seed(kSeed, "acceptance/oracle", static_cast<std::uint64_t>(t)));
    const auto n = static_cast<Eigen::Index>(rng.integer(8, 64));
    const auto d = static_cast<Eigen::Index>(rng.integer(1, 8));
    const int k = static_cast<int>(rng.integer(1, std::min<std::int64_t>(10, n - 2)));
    Eigen::MatrixXd X = testing::random_matrix(rng, n, d);
    if (t % 4 == 3) X = X.array().round();  // lattice points: tied distances
    Eigen::MatrixXd Q = testing::random_matrix(rng, 16, d) * 2.0;
    const auto knn = fit_matrix(make_config(DetectorKind::kNN, {{"k", static_cast<double>(k)}}), X);
    const auto lof = fit_matrix(make_config(DetectorKind::LOF, {{"k", static_cast<double>(k)}}), X);
    const testing::BruteLof ref(X, k);
    const std::string tag = "set " + std::to_string(t);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd xi = X.row(i).transpose();
      const int skip = static_cast<int>(i);
      c.require(std::abs(knn.state->training_scores()(i) - testing::brute_knn(X, xi, k, skip)) <= kOracleTol,
                tag + " kNN train row " + std::to_string(i));
      c.require(std::abs(lof.state->training_scores()(i) - ref.score(xi, skip)) <= kOracleTol,
                tag + " LOF train row " + std::to_string(i));
      compared += 2;
    }
    const Eigen::VectorXd sk = knn.score_rows(Q), sl = lof.score_rows(Q);
    for (Eigen::Index q = 0; q < Q.rows(); ++q) {
      const Eigen::VectorXd xq = Q.row(q).transpose();
      c.require(std::abs(sk(q) - testing::brute_knn(X, xq, k)) <= kOracleTol, tag + " kNN query");
      c.require(std::abs(sl(q) - ref.score(xq)) <= kOracleTol, tag + " LOF query");
      compared += 2;
    }
    std::vector<bool> y(static_cast<std::size_t>(Q.rows()));
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 3 == 0;
    for (const Eigen::VectorXd* s : {&sk, &sl}) {
      c.require(std::abs(auc(*s, y) - testing::sweep_auc(*s, y)) <= kOracleTol, tag + " AUC");
      ++compared;
    }
  }
  const double secs = timer.seconds();
  c.require(secs < kC1Seconds, "runtime " + fmt(secs, 2) + " s");
  return c.result(std::to_string(compared) + " comparisons on 20 sets, tol 1e-9, " + fmt(secs, 2) + " s");
}

// ---------------------------------------------------------------- criterion 2

Result criterion2() {
  const Splits& s = benchmark();
  Check c;
  Timer timer;
  PipelineOptions on;
  on.scaling = true;
  const PipelineModel pm = fit_pipeline(s.train, on);
  const LabeledDataset parts[] = {transform(pm, s.train), transform(pm, s.validation), transform(pm, s.test)};
  const double secs = timer.seconds();

  // Degeneracy is judged on the same pipeline with scaling off.
  PipelineOptions off;
  off.scaling = false;
  const PipelineModel raw_pm = fit_pipeline(s.train, off);
  const LabeledDataset raw_train = transform(raw_pm, s.train);
  c.require(raw_pm.kept_features == pm.kept_features, "scaled and unscaled pipelines keep different features");

  const auto& schema = parts[0].schema;
  std::size_t checked = 0, degenerate = 0;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].is_categorical()) continue;
    const auto slot = static_cast<Eigen::Index>(schema.slot(i));
    std::vector<double> raw_col, col;
    for (const auto& x : raw_train.rows) raw_col.push_back(x.numerical(slot));
    for (const auto& x : parts[0].rows) col.push_back(x.numerical(slot));
    if (!(quantile7(raw_col, 0.75) > quantile7(raw_col, 0.25))) {
      ++degenerate;
      continue;
    }
    ++checked;
    const double med = quantile7(col, 0.5);
    const double iqr = quantile7(col, 0.75) - quantile7(col, 0.25);
    c.require(std::abs(med) <= kScalerTol, schema[i].name + " median " + std::to_string(med));
    c.require(std::abs(iqr - 1.0) <= kScalerTol, schema[i].name + " IQR " + std::to_string(iqr));
  }
  c.require(checked > 0, "no non-degenerate numerical feature");

  std::size_t missing = 0, cells = 0, rows = 0;
  for (const auto& ds : parts) {
    rows += ds.size();
    for (const auto& x : ds.rows) {
      for (int code : x.categorical) missing += code == kMissingCode;
      for (Eigen::Index j = 0; j < x.numerical.size(); ++j) missing += !std::isfinite(x.numerical(j));
      cells += x.categorical.size() + static_cast<std::size_t>(x.numerical.size());
    }
  }
  c.require(missing == 0, std::to_string(missing) + " missing or non-finite cells");
  c.require(secs < kC2Seconds, "runtime " + fmt(secs, 2) + " s");
  return c.result(std::to_string(checked) + " scaled features (" + std::to_string(degenerate) + " degenerate), " +
                  std::to_string(s.train.size()) + " train rows, " + std::to_string(rows) + " rows / " +
                  std::to_string(cells) + " cells transformed, " + std::to_string(missing) + " missing, " +
                  fmt(secs, 2) + " s");
}

// ---------------------------------------------------------------- criterion 3

Result criterion3() {
  Check c;
  testing::TempDir dir("acceptance-gt");
  SynthBenchmark bench;
  bench.counts = scaled_counts(reference_counts(), 0.05);
  bench.seed = kSeed;
  const Splits s = synth_splits(bench, pfcp_schema());
  write_dataset(s.train, dir.file("train.csv"));
  write_dataset(s.validation, dir.file("validation.csv"));
  write_dataset(s.test, dir.file("test.csv"));

  std::size_t attack_row = 0;
  while (!is_attack(s.test.labels[attack_row])) ++attack_row;
  LabeledDataset poisoned = s.train;
  poisoned.add(s.test.rows[attack_row], s.test.labels[attack_row], s.test.row_ids[attack_row]);
  write_dataset(poisoned, dir.file("train_poisoned.csv"));

  auto config_for = [&](const std::string& train) {
    nlohmann::json j = {{"output_dir", dir.file("runs")},
                        {"detectors", {"HBOS"}},
                        {"ensembles", nlohmann::json::array()},
                        {"data",
                         {{"splits",
                           {{"train", {{"path", dir.file(train)}}},
                            {"validation", {{"path", dir.file("validation.csv")}}},
                            {"test", {{"path", dir.file("test.csv")}}}}}}}};
    return parse_run_config(j, dir.path().string());
  };

  std::ostringstream log;
  std::string code = "none";
  try {
    cmd_preprocess(config_for("train_poisoned.csv"), log);
  } catch (const Error& e) {
    code = e.code();
  }
  c.require(code == "GT4", "poisoned train gave " + code);

  std::string drop;
  try {
    const fs::path run = cmd_preprocess(config_for("train.csv"), log);
    drop = testing::read_file((run / "scaled" / "drop_report.csv").string());
  } catch (const Error& e) {
    c.require(false, std::string("clean preprocess failed: ") + e.what());
  }
  const auto schema = pfcp_schema();
  for (const char* f : {"ip.src", "udp.dstport"}) {
    c.require(schema.find(f).has_value(), std::string(f) + " absent from the input schema");
    c.require(drop.find(std::string(f) + ",GT1") != std::string::npos, std::string(f) + " not dropped under GT1");
  }
  return c.result("poisoned train -> " + code + "; ip.src and udp.dstport dropped under GT1");
}

// ---------------------------------------------------------------- criterion 4

Result criterion4() {
  Timer timer;
  Check c;
  const auto blob = testing::blob_benchmark(kSeed);
  int perfect = 0;
  for (auto k : kAllDetectors) {
    const double a = auc(fit_matrix(detector_config(k), blob.train).score_rows(blob.test), blob.is_outlier);
    c.require(a == 1.0, "blob " + std::string(detector_name(k)) + " AUC " + fmt(a, 6));
    perfect += a == 1.0;
  }

  const Splits& s = benchmark();
  PipelineOptions opt;
  const PipelineModel pm = fit_pipeline(s.train, opt);
  const LabeledDataset train = transform(pm, s.train), val = transform(pm, s.validation), test = transform(pm, s.test);
  const Eigen::MatrixXd Xtrain = design_matrix(train), Xval = design_matrix(val), Xtest = design_matrix(test);
  const auto y_val = attack_mask(val.labels), y_test = attack_mask(test.labels);

  std::map<DetectorKind, DetectorModel> fitted;
  std::map<DetectorKind, double> f1;
  auto base = [&](DetectorKind k) -> const DetectorModel& {
    if (!fitted.count(k)) {
      fitted.emplace(k, fit_matrix(detector_config(k), Xtrain));
      const auto& m = fitted.at(k);
      f1[k] = threshold_metrics(m.score_rows(Xtest), y_test, m.threshold).f1;
    }
    return fitted.at(k);
  };
  std::ostringstream summary;
  summary << perfect << "/12 blob AUC = 1;";
  for (auto k : {DetectorKind::HBOS, DetectorKind::IForest}) {
    base(k);
    c.require(f1[k] >= kMinF1, std::string(detector_name(k)) + " F1 " + fmt(f1[k]));
    summary << ' ' << detector_name(k) << " F1 " << fmt(f1[k]);
  }
  for (const auto& spec : ensemble_presets()) {
    std::vector<DetectorModel> bases;
    double best_base = 0;
    for (auto k : spec.bases) {
      bases.push_back(base(k));
      best_base = std::max(best_base, f1[k]);
    }
    const auto e = fit_ensemble(spec, std::move(bases), Xval, y_val,
                                derive_seed(kSeed, std::string("ensemble/") + spec.name));
    const double ef1 = threshold_metrics(e.score_rows(Xtest), y_test, e.threshold).f1;
    c.require(ef1 >= kMinF1, spec.name + " F1 " + fmt(ef1));
    c.require(ef1 >= best_base - kEnsembleSlack, spec.name + " F1 " + fmt(ef1) + " < best base " + fmt(best_base) + " - 0.01");
    summary << ' ' << spec.name << ' ' << fmt(ef1) << " (bases max " << fmt(best_base) << ')';
  }
  const double secs = timer.seconds();
  c.require(secs < kC4Seconds, "runtime " + fmt(secs, 1) + " s");
  summary << ", " << fmt(secs, 1) << " s";
  return c.result(summary.str());
}

// ------------------------------------------------------------ criteria 5, 6

// Wraps the deployed oracle and re-checks every query against the sample the
// campaign is working on, with the same rules but no shared state.
class CheckingOracle final : public ScoreOracle {
 public:
  CheckingOracle(const ScoreOracle& inner, const LabeledDataset& samples, const std::map<ClassLabel, ClassSetup>& setup)
      : inner_(inner), samples_(samples), setup_(setup) {}

  void begin(std::size_t row) {
    row_ = row;
    first_ = true;
    per_sample_[row] = 0;
  }

  double score(const FeatureVector& x) const override {
    if (first_) {
      // The detection check on the untouched original.
      first_ = false;
      if (!identical(x, samples_.rows[row_])) ++bad_;
      return inner_.score(x);
    }
    ++per_sample_[row_];
    ++candidates_;
    const auto& cs = setup_.at(samples_.labels[row_]);
    const auto& orig = samples_.rows[row_];
    if (!check_feasible(orig, x, cs.J, samples_.schema) || !check_compliant(cs.compliance, samples_.schema, orig, x))
      ++bad_;
    return inner_.score(x);
  }
  double threshold() const override { return inner_.threshold(); }

  std::size_t candidates() const { return candidates_; }
  std::size_t bad() const { return bad_; }
  const std::map<std::size_t, int>& per_sample() const { return per_sample_; }

 private:
  const ScoreOracle& inner_;
  const LabeledDataset& samples_;
  const std::map<ClassLabel, ClassSetup>& setup_;
  std::size_t row_ = 0;
  mutable bool first_ = true;
  mutable std::size_t candidates_ = 0, bad_ = 0;
  mutable std::map<std::size_t, int> per_sample_;
};

struct CampaignStats {
  std::size_t attacked = 0, evaded = 0, candidates = 0, bad = 0;
  int max_queries = 0;
  bool rs_single = true;
  bool counts_agree = true;
  double rate() const { return attacked ? static_cast<double>(evaded) / static_cast<double>(attacked) : 0.0; }
};

struct AttackRuns {
  std::map<std::pair<bool, Algorithm>, CampaignStats> stats;
  double seconds = 0;
};

const AttackRuns& attack_runs() {
  static const AttackRuns runs = [] {
    AttackRuns out;
    Timer timer;
    const Splits& s = benchmark();
    RunConfig cfg;
    cfg.seed = kSeed;
    for (bool scaled : {false, true}) {
      PipelineOptions opt;
      opt.scaling = scaled;
      const PipelineModel pm = fit_pipeline(s.train, opt);
      const DetectorModel hbos = fit_matrix(detector_config(DetectorKind::HBOS), design_matrix(transform(pm, s.train)));
      const auto setup = class_setups(cfg, pm, s);
      LabeledDataset samples = s.test;
      samples.schema = pm.input_schema;
      const DetectorOracle deployed(pm, hbos);
      for (auto alg : {Algorithm::RS, Algorithm::GA_DE, Algorithm::GA_ES}) {
        AttackConfig ac;
        ac.algorithm = alg;
        ac.budget = kQueryBudget;
        ac.seed = derive_seed(kSeed, "attack");
        ac.record_trace = false;
        CheckingOracle checker(deployed, samples, setup);
        const Campaign camp = run_campaign(checker, samples, setup, ac, [&](std::size_t row) { checker.begin(row); });
        CampaignStats st;
        st.attacked = camp.outcomes.size();
        st.candidates = checker.candidates();
        st.bad = checker.bad();
        for (const auto& o : camp.outcomes) {
          st.evaded += o.evaded;
          const int seen = checker.per_sample().at(o.sample);
          st.max_queries = std::max(st.max_queries, seen);
          if (seen != o.queries_used) st.counts_agree = false;
          if (alg == Algorithm::RS && seen != 1) st.rs_single = false;
        }
        out.stats[{scaled, alg}] = st;
      }
    }
    out.seconds = timer.seconds();
    return out;
  }();
  return runs;
}

Result criterion5() {
  Check c;
  const auto& runs = attack_runs();
  std::size_t candidates = 0, bad = 0, attacked = 0;
  int max_q = 0;
  for (const auto& [key, st] : runs.stats) {
    const std::string tag = std::string(variant_name(key.first)) + " " + std::string(algorithm_name(key.second));
    c.require(st.attacked >= kMinCampaignSamples, tag + " attacked only " + std::to_string(st.attacked));
    c.require(st.bad == 0, tag + " " + std::to_string(st.bad) + " infeasible or non-compliant queries");
    c.require(st.max_queries <= kQueryBudget, tag + " used " + std::to_string(st.max_queries) + " queries");
    c.require(st.counts_agree, tag + " query counts disagree with the outcomes");
    if (key.second == Algorithm::RS) c.require(st.rs_single, tag + " sample with a query count other than 1");
    candidates += st.candidates;
    bad += st.bad;
    attacked += st.attacked;
    max_q = std::max(max_q, st.max_queries);
  }
  return c.result(std::to_string(runs.stats.size()) + " campaigns, " + std::to_string(attacked) + " attacked samples, " +
                  std::to_string(candidates) + " queries checked, " + std::to_string(bad) +
                  " violations, max " + std::to_string(max_q) + " per sample, RS 1 per sample");
}

Result criterion6() {
  Check c;
  const auto& runs = attack_runs();
  auto rate = [&](bool scaled, Algorithm a) { return runs.stats.at({scaled, a}).rate(); };
  const double rs = rate(false, Algorithm::RS), de = rate(false, Algorithm::GA_DE), es = rate(false, Algorithm::GA_ES);
  const double de_s = rate(true, Algorithm::GA_DE), es_s = rate(true, Algorithm::GA_ES), rs_s = rate(true, Algorithm::RS);
  c.require(rs <= kMaxRsEvasion, "unscaled RS " + fmt(rs));
  c.require(de >= kMinDeEvasion, "unscaled GA_DE " + fmt(de));
  c.require(std::abs(es - de) <= kEsGap, "GA_ES " + fmt(es) + " vs GA_DE " + fmt(de));
  c.require(de_s < de, "scaled GA_DE " + fmt(de_s) + " not below " + fmt(de));
  c.require(es_s < es, "scaled GA_ES " + fmt(es_s) + " not below " + fmt(es));
  c.require(runs.seconds < kC6Seconds, "runtime " + fmt(runs.seconds, 1) + " s");
  return c.result("HBOS unscaled RS " + fmt(rs) + " GA_DE " + fmt(de) + " GA_ES " + fmt(es) + "; scaled RS " + fmt(rs_s) +
                  " GA_DE " + fmt(de_s) + " GA_ES " + fmt(es_s) + "; " + fmt(runs.seconds, 1) + " s for 6 campaigns");
}

// ---------------------------------------------------------------- criterion 7

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = testing::read_file(e.path().string());
  return out;
}

Result criterion7() {
  Check c;
  testing::TempDir a("acceptance-det-a"), b("acceptance-det-b");
  const auto doc = nlohmann::json::parse(R"({
    "seed": 42, "data": {"synth": {"scale": 0.1}}, "pipeline": {"scaling": "both"},
    "detectors": ["HBOS", "IForest", "LODA"], "ensembles": ["HKLIP"],
    "attack": {"max_samples": 150, "trace": true}})");
  std::map<std::string, std::string> reports[2];
  std::string names[2];
  int i = 0;
  for (const auto* dir : {&a, &b}) {
    RunConfig cfg = parse_run_config(doc);
    cfg.output_dir = dir->path().string();
    std::ostringstream log;
    const fs::path run = cmd_preprocess(cfg, log);
    cmd_train(cfg, log);
    cmd_evaluate(cfg, log);
    cmd_attack(cfg, log);
    cmd_report(cfg, log);
    reports[i] = tree_contents(run / "reports");
    names[i] = run.filename().string();
    ++i;
  }
  c.require(names[0] == names[1], "run directory names differ");
  c.require(reports[0].size() >= 7, "only " + std::to_string(reports[0].size()) + " report files");
  std::size_t same = 0;
  for (const auto& [name, text] : reports[0]) {
    const auto it = reports[1].find(name);
    if (it == reports[1].end()) {
      c.require(false, name + " missing from the second run");
    } else if (it->second != text) {
      c.require(false, name + " differs");
    } else {
      ++same;
    }
  }
  c.require(reports[0].size() == reports[1].size(), "report file sets differ");
  return c.result(std::to_string(same) + "/" + std::to_string(reports[0].size()) + " report files byte-identical");
}

// ---------------------------------------------------------------- criterion 8

Result criterion8() {
  const char* path = std::getenv("PFAD_DATASET_CONFIG");
  if (!path || !*path) return {Status::skip, "PFAD_DATASET_CONFIG not set; external dataset absent"};
  Check c;
  const RunConfig cfg = load_run_config(path);
  if (!cfg.splits) return {Status::fail, "the dataset config has no data.splits"};
  const FeatureSchema schema = cfg.schema_path ? load_schema(*cfg.schema_path) : pfcp_schema();
  const Splits s = build_splits(*cfg.splits, schema);
  const SplitCounts want = reference_counts();
  const std::pair<const LabeledDataset*, const std::map<ClassLabel, std::size_t>*> parts[] = {
      {&s.train, &want.train}, {&s.validation, &want.validation}, {&s.test, &want.test}};
  const char* split_names[] = {"train", "validation", "test"};
  for (int p = 0; p < 3; ++p) {
    const auto got = class_distribution(*parts[p].first);
    for (auto cls : kAllClasses) {
      const auto it = parts[p].second->find(cls);
      const std::size_t expected = it == parts[p].second->end() ? 0 : it->second;
      c.require(got.at(cls) == expected, std::string(split_names[p]) + " " + std::string(class_name(cls)) + " " +
                                             std::to_string(got.at(cls)) + " != " + std::to_string(expected));
    }
  }
  PipelineOptions opt = cfg.pipeline;
  const PipelineModel pm = fit_pipeline(s.train, opt);
  auto counts = protocol_counts(pm.output_schema);
  c.require(counts[Protocol::ip] == kReferenceIp, "IP features " + std::to_string(counts[Protocol::ip]));
  c.require(counts[Protocol::udp] == kReferenceUdp, "UDP features " + std::to_string(counts[Protocol::udp]));
  c.require(counts[Protocol::pfcp] == kReferencePfcp, "PFCP features " + std::to_string(counts[Protocol::pfcp]));
  return c.result("split counts checked; IP " + std::to_string(counts[Protocol::ip]) + ", UDP " +
                  std::to_string(counts[Protocol::udp]) + ", PFCP " + std::to_string(counts[Protocol::pfcp]));
}

}  // namespace

int main() {
  // Warnings from the pipeline would interleave with the result lines.
  std::vector<std::string> warnings;
  const auto previous = set_warning_sink([&](const std::string& m) { warnings.push_back(m); });

  const std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
      {"oracle equivalence (kNN, LOF, AUC)", criterion1},
      {"scaler and imputer correctness", criterion2},
      {"guideline enforcement (GT4, GT1)", criterion3},
      {"detector sanity (blob AUC, synthetic F1)", criterion4},
      {"attack compliance and query budget", criterion5},
      {"attack effectiveness ordering", criterion6},
      {"determinism of end-to-end runs", criterion7},
      {"optional dataset reproduction", criterion8},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Result r;
    Timer timer;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {Status::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = r.status == Status::pass ? "PASS" : r.status == Status::fail ? "FAIL" : "SKIP";
    failed += r.status == Status::fail;
    std::cout << "criterion " << i + 1 << ": " << tag << " " << criteria[i].first << " | " << r.detail << " ["
              << fmt(timer.seconds(), 1) << " s]" << std::endl;
  }
  set_warning_sink(previous);
  std::cout << (failed ? "acceptance: FAIL (" + std::to_string(failed) + " criteria)" : std::string("acceptance: PASS"))
            << " | " << warnings.size() << " library warnings suppressed" << std::endl;
  return failed ? 1 : 0;
}
