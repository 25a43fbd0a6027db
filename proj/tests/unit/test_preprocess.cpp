#include <cmath>
#include <limits>

#include "doctest.h"
#include "pfad/errors.hpp"
#include "pfad/log.hpp"
#include "pfad/preprocess.hpp"
#include "pfad/stats.hpp"
#include "pfad/synth.hpp"
#include "support/tempdir.hpp"

using namespace pfad;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

FeatureDescriptor num(const std::string& name, Protocol p = Protocol::pfcp) {
  return {name, FeatureKind::numerical, p, false, false, {}, {}};
}

FeatureDescriptor cat(const std::string& name, std::vector<std::string> labels, Protocol p = Protocol::pfcp) {
  return {name, FeatureKind::categorical, p, false, false, std::move(labels), {}};
}

// Rows given as (categorical codes, numerical values), all Normal.
LabeledDataset make(const FeatureSchema& s, const std::vector<std::pair<std::vector<int>, std::vector<double>>>& rows) {
  LabeledDataset ds;
  ds.schema = s;
  std::uint64_t id = 0;
  for (const auto& [c, n] : rows) {
    FeatureVector x{c, Eigen::Map<const Eigen::VectorXd>(n.data(), static_cast<Eigen::Index>(n.size()))};
    ds.add(std::move(x), ClassLabel::Normal, id++);
  }
  return ds;
}

bool dropped(const std::vector<DropEntry>& r, const std::string& feature, const std::string& reason) {
  for (const auto& d : r)
    if (d.feature == feature && d.reason == reason) return true;
  return false;
}

}  // namespace

TEST_CASE("GT1 removes addresses and ports, keeps protocol fields") {
  const FeatureSchema s({num("ip.src", Protocol::ip), num("ip.dst", Protocol::ip), num("udp.srcport", Protocol::udp),
                         num("udp.dstport", Protocol::udp), num("pfcp.msg_type"), num("frame.time_epoch", Protocol::meta)});
  const auto ds = make(s, {{{}, {1, 2, 3, 4, 5, 6}}});
  std::vector<DropEntry> report;
  const auto out = drop_environment_features(ds, &report);
  CHECK(out.schema.names() == std::vector<std::string>{"pfcp.msg_type"});
  for (const char* f : {"ip.src", "ip.dst", "udp.srcport", "udp.dstport", "frame.time_epoch"}) CHECK(dropped(report, f, "GT1"));

  const FeatureSchema clean({num("pfcp.length"), num("udp.length", Protocol::udp)});
  report.clear();
  CHECK(drop_environment_features(make(clean, {{{}, {1, 2}}}), &report).schema == clean);
  CHECK(report.empty());

  report.clear();
  const auto extra = drop_environment_features(make(clean, {{{}, {1, 2}}}), &report, {"udp.len*"});
  CHECK(extra.schema.names() == std::vector<std::string>{"pfcp.length"});
}

TEST_CASE("GT2 keeps UDP/PFCP rows and drops TCP/ICMP columns") {
  const FeatureSchema s({num("tcp.len", Protocol::tcp), num("icmp.type", Protocol::icmp), num("udp.length", Protocol::udp),
                         num("pfcp.length")});
  const auto ds = make(s, {{{}, {kNaN, kNaN, 40, 20}}, {{}, {12, kNaN, kNaN, kNaN}}, {{}, {kNaN, 8, kNaN, kNaN}},
                           {{}, {kNaN, kNaN, 44, 24}}});
  std::vector<DropEntry> report;
  std::size_t removed = 0;
  const auto out = filter_control_plane(ds, &report, &removed);
  CHECK(out.size() == 2);
  CHECK(removed == 2);
  CHECK(out.schema.names() == std::vector<std::string>{"udp.length", "pfcp.length"});
  CHECK(dropped(report, "tcp.len", "GT2"));
  for (const auto& f : out.schema.features()) CHECK((f.protocol != Protocol::tcp && f.protocol != Protocol::icmp));

  const FeatureSchema pure({num("pfcp.length")});
  const auto p = make(pure, {{{}, {1}}, {{}, {2}}});
  report.clear();
  const auto same = filter_control_plane(p, &report);
  CHECK(same.size() == 2);
  CHECK(report.empty());
}

TEST_CASE("GT3 drops constant, all-missing and duplicate columns") {
  const FeatureSchema s({num("pfcp.a"), num("pfcp.b"), num("pfcp.c"), num("pfcp.d"), cat("pfcp.e", {"x", "y"})});
  const auto ds = make(s, {{{0}, {1, 5, kNaN, 1}}, {{1}, {2, 5, kNaN, 2}}, {{0}, {3, 5, kNaN, 3}}});
  std::vector<DropEntry> report;
  const auto out = drop_uninformative(ds, &report);
  CHECK(out.schema.names() == std::vector<std::string>{"pfcp.a", "pfcp.e"});
  CHECK(dropped(report, "pfcp.b", "GT3"));
  CHECK(dropped(report, "pfcp.c", "GT3"));
  CHECK(dropped(report, "pfcp.d", "GT3"));

  const FeatureSchema v({num("pfcp.a"), num("pfcp.b")});
  report.clear();
  CHECK(drop_uninformative(make(v, {{{}, {1, 2}}, {{}, {2, 1}}}), &report).schema == v);
}

TEST_CASE("GT3 treats a missing marker as one more value") {
  const FeatureSchema s({num("pfcp.a"), num("pfcp.b")});
  const auto ds = make(s, {{{}, {1, 7}}, {{}, {1, kNaN}}, {{}, {1, 7}}});
  std::vector<DropEntry> report;
  const auto out = drop_uninformative(ds, &report);
  CHECK(out.schema.names() == std::vector<std::string>{"pfcp.b"});
}

TEST_CASE("categorical imputation uses the training mode") {
  const FeatureSchema s({cat("pfcp.cause", {"A", "B"}), num("pfcp.length")});
  const auto ds = make(s, {{{0}, {1}}, {{0}, {2}}, {{1}, {3}}, {{kMissingCode}, {4}}});
  const auto st = fit_imputer(ds);
  const auto out = apply_imputer(st, ds);
  CHECK(out.rows[3].categorical[0] == 0);
}

TEST_CASE("numerical imputation follows the linear relation on complete pairs") {
  const FeatureSchema s({num("pfcp.x"), num("pfcp.y")});
  const auto ds = make(s, {{{}, {1, 2}}, {{}, {2, 4}}, {{}, {3, kNaN}}, {{}, {4, 8}}, {{}, {5, 10}}});
  const auto st = fit_imputer(ds);
  const auto out = apply_imputer(st, ds);
  CHECK(std::abs(out.rows[2].numerical(1) - 6.0) < 1e-3);
}

TEST_CASE("imputation is the identity on complete data and clamps to the observed range") {
  const FeatureSchema s({num("pfcp.x"), num("pfcp.y")});
  const auto ds = make(s, {{{}, {1, 2}}, {{}, {2, 4}}, {{}, {4, 8}}, {{}, {5, 10}}});
  const auto st = fit_imputer(ds);
  const auto out = apply_imputer(st, ds);
  for (std::size_t r = 0; r < ds.size(); ++r) CHECK(identical(out.rows[r], ds.rows[r]));

  FeatureVector far{{}, Eigen::Vector2d(1000, kNaN)};
  impute_vector(st, far);
  CHECK(far.numerical(1) == 10);
}

TEST_CASE("all-missing training feature falls back with a warning") {
  const FeatureSchema s({num("pfcp.x"), num("pfcp.y"), cat("pfcp.c", {"A"})});
  const auto ds = make(s, {{{kMissingCode}, {1, kNaN}}, {{kMissingCode}, {2, kNaN}}});
  WarningCapture w;
  const auto st = fit_imputer(ds);
  CHECK(w.messages().size() >= 2);
  const auto out = apply_imputer(st, ds);
  CHECK(out.rows[0].numerical(1) == 0);
  CHECK(out.rows[0].categorical[0] == kUnknownCode);
}

TEST_CASE("robust scaler uses median and interquartile range") {
  const FeatureSchema s({num("pfcp.x"), num("pfcp.k")});
  const auto ds = make(s, {{{}, {1, 7}}, {{}, {2, 7}}, {{}, {3, 7}}, {{}, {4, 7}}, {{}, {5, 7}}});
  const auto st = fit_scaler(ds);
  CHECK(st.median(0) == 3);
  CHECK(st.q3(0) - st.q1(0) == 2);
  CHECK(st.degenerate(1));
  const auto out = apply_scaler(st, ds);
  CHECK(out.rows[4].numerical(0) == 1.0);
  CHECK(out.rows[0].numerical(0) == -1.0);
  for (const auto& r : out.rows) CHECK(r.numerical(1) == 0.0);
}

TEST_CASE("linear-interpolation quantiles") {
  const std::vector<double> v = {1, 2, 3, 4, 5};
  CHECK(quantile(std::span<const double>(v), 0.25) == 2);
  CHECK(quantile(std::span<const double>(v), 0.75) == 4);
  std::vector<double> h(100);
  for (int i = 0; i < 100; ++i) h[static_cast<std::size_t>(i)] = i + 1;
  CHECK(quantile(std::span<const double>(h), 0.99) == doctest::Approx(99.01).epsilon(1e-12));
}

TEST_CASE("fitted pipeline on synthetic traffic") {
  SynthBenchmark bench;
  bench.counts = scaled_counts(reference_counts(), 0.05);
  bench.tcp_fraction = 0.05;
  WarningCapture w;
  const auto splits = synth_splits(bench, pfcp_schema());
  const auto pm = fit_pipeline(splits.train);

  for (const auto& f : pm.output_schema.features()) {
    CHECK_FALSE(f.environment_dependent);
    CHECK_FALSE(matches_any(default_environment_patterns(), f.name));
    CHECK((f.protocol == Protocol::ip || f.protocol == Protocol::udp || f.protocol == Protocol::pfcp ||
           f.protocol == Protocol::meta));
  }
  CHECK(dropped(pm.drop_report, "ip.src", "GT1"));
  CHECK(dropped(pm.drop_report, "udp.dstport", "GT1"));

  const auto t1 = transform(pm, splits.test), t2 = transform(pm, splits.test);
  REQUIRE(t1.size() == t2.size());
  for (std::size_t r = 0; r < t1.size(); ++r) {
    CHECK(identical(t1.rows[r], t2.rows[r]));
    CHECK(validate_vector(t1.schema, t1.rows[r]).empty() == true);
  }

  SUBCASE("transforming other splits leaves the model untouched") {
    const auto before = pipeline_to_json(pm).dump();
    (void)transform(pm, splits.validation);
    CHECK(pipeline_to_json(pm).dump() == before);
  }
  SUBCASE("serialized model transforms identically") {
    const auto back = pipeline_from_json(pipeline_to_json(pm));
    const auto t3 = transform(back, splits.test);
    for (std::size_t r = 0; r < t1.size(); ++r) CHECK(identical(t1.rows[r], t3.rows[r]));
  }
  SUBCASE("scaling disabled leaves imputed values unscaled") {
    PipelineOptions o;
    o.scaling = false;
    const auto raw = fit_pipeline(splits.train, o);
    CHECK_FALSE(raw.scaling_enabled);
    const auto a = transform(raw, splits.train);
    const auto imputed = apply_imputer(raw.imputer, select_columns(filter_control_plane(splits.train, nullptr), raw.kept_features));
    std::size_t compared = 0;
    for (std::size_t r = 0; r < a.size() && r < imputed.size(); ++r, ++compared)
      CHECK(identical(a.rows[r], imputed.rows[r]));
    CHECK(compared > 0);
  }
}

TEST_CASE("pipeline enforces benign training data and a non-empty result") {
  const FeatureSchema s({num("pfcp.x"), num("ip.src", Protocol::ip)});
  auto ds = make(s, {{{}, {1, 1}}, {{}, {2, 2}}});
  ds.labels[1] = ClassLabel::Flood;
  CHECK_THROWS_AS(fit_pipeline(ds), GuidelineViolation);

  auto constant = make(s, {{{}, {1, 1}}, {{}, {1, 2}}});
  CHECK_THROWS_AS(fit_pipeline(constant), PipelineError);
}

TEST_CASE("field mapping restricts the candidate features") {
  const FeatureSchema s({num("pfcp.x"), num("pfcp.y"), num("pfcp.z")});
  const auto ds = make(s, {{{}, {1, 3, 5}}, {{}, {2, 1, 4}}, {{}, {3, 2, 9}}});
  PipelineOptions o;
  o.field_mapping = std::vector<std::string>{"pfcp.y", "pfcp.z"};
  const auto pm = fit_pipeline(ds, o);
  CHECK(pm.kept_features == std::vector<std::string>{"pfcp.y", "pfcp.z"});
  CHECK(dropped(pm.drop_report, "pfcp.x", "mapping"));
}
