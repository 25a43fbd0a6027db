#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "pfad/attack.hpp"
#include "pfad/errors.hpp"
#include "pfad/log.hpp"

using namespace pfad;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Categorical slots: msg_type, s, colour. Numerical slots: seid, a, b.
FeatureSchema toy_schema() {
  return FeatureSchema({
      {"pfcp.msg_type", FeatureKind::categorical, Protocol::pfcp, false, false, {"50", "54"}, {}},
      {"pfcp.s", FeatureKind::categorical, Protocol::pfcp, false, false, {"0", "1"}, {}},
      {"pfcp.seid", FeatureKind::numerical, Protocol::pfcp, false, true, {}, Interval{0, 1e6}},
      {"pfcp.a", FeatureKind::numerical, Protocol::pfcp, false, false, {}, Interval{0, 100}},
      {"pfcp.b", FeatureKind::numerical, Protocol::pfcp, false, false, {}, Interval{0, 100}},
      {"pfcp.colour", FeatureKind::categorical, Protocol::pfcp, false, false, {"x", "y", "z"}, {}},
  });
}

constexpr std::size_t kSeid = 2, kA = 3, kB = 4, kColour = 5;

FeatureVector row(double a, double b, int colour = 0, double seid = 7, int msg = 1, int s = 1) {
  FeatureVector x;
  x.categorical = {msg, s, colour};
  x.numerical = Eigen::Vector3d(seid, a, b);
  return x;
}

FeasibleSet toy_j() {
  FeasibleSet J;
  J.indices = {kA, kB, kColour};
  return J;
}

// Attack-class source rows spread over [0, 100].
LabeledDataset toy_source() {
  LabeledDataset ds;
  ds.schema = toy_schema();
  for (int i = 0; i <= 20; ++i) ds.add(row(5.0 * i, 100 - 5.0 * i, i % 3), ClassLabel::Deletion, static_cast<std::uint64_t>(i));
  return ds;
}

double sum_ab(const FeatureVector& x) {
  const double a = std::isnan(x.numerical(1)) ? 0 : x.numerical(1);
  const double b = std::isnan(x.numerical(2)) ? 0 : x.numerical(2);
  return a + b;
}

struct Fixture {
  FeatureSchema schema = toy_schema();
  FeasibleSet J = toy_j();
  Marginals marginals = estimate_marginals(toy_source(), J);
  ComplianceSpec compliance = default_compliance(ClassLabel::Deletion);
  FeatureVector x = row(90, 90);
};

AttackConfig config(Algorithm a, std::uint64_t seed = 1) {
  AttackConfig c;
  c.algorithm = a;
  c.seed = seed;
  return c;
}

double min_trace(const AttackOutcome& o) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& [q, f] : o.trace) m = std::min(m, f);
  return m;
}

}  // namespace

TEST_CASE("fitness is the positive part of score minus threshold") {
  CHECK(fitness_value(5, 3) == 2);
  CHECK(fitness_value(3, 3) == 0);
  CHECK(fitness_value(1, 3) == 0);
}

TEST_CASE("feasibility") {
  const Fixture f;
  CHECK(check_feasible(f.x, f.x, f.J, f.schema));
  CHECK(check_feasible(f.x, row(0, 100, 2), f.J, f.schema));
  CHECK_FALSE(check_feasible(f.x, row(90, 90, 0, 8), f.J, f.schema));       // seid outside J
  CHECK_FALSE(check_feasible(f.x, row(150, 90), f.J, f.schema));            // out of range
  CHECK(check_feasible(f.x, row(kNaN, 90), f.J, f.schema));                 // absent field
  CHECK(check_feasible(f.x, row(90, 90, kUnknownCode), f.J, f.schema));     // UNKNOWN label
  CHECK(check_feasible(f.x, row(90, 90, kMissingCode), f.J, f.schema));
  CHECK_FALSE(check_feasible(f.x, row(90, 90, 3), f.J, f.schema));          // code outside the domain

  FeasibleSet narrow = f.J;
  narrow.narrowed_range[kA] = Interval{10, 20};
  narrow.narrowed_codes[kColour] = {1};
  CHECK(check_feasible(f.x, row(15, 90, 1), narrow, f.schema));
  CHECK_FALSE(check_feasible(f.x, row(25, 90, 1), narrow, f.schema));
  CHECK_FALSE(check_feasible(f.x, row(15, 90, 0), narrow, f.schema));
  CHECK_FALSE(check_feasible(f.x, row(kNaN, 90, 1), narrow, f.schema));
}

TEST_CASE("compliance for deletion requests") {
  const Fixture f;
  CHECK(check_compliant(f.compliance, f.schema, f.x, f.x));
  CHECK(check_compliant(f.compliance, f.schema, f.x, row(0, 0, 2)));
  CHECK_FALSE(check_compliant(f.compliance, f.schema, f.x, row(90, 90, 0, 7, 0)));  // msg_type 50
  CHECK_FALSE(check_compliant(f.compliance, f.schema, f.x, row(90, 90, 0, 7, 1, 0)));  // S flag cleared
  CHECK_FALSE(check_compliant(f.compliance, f.schema, f.x, row(90, 90, 0, 9)));  // SEID is protected
  // An original breaking the rules is not compliant with itself.
  const auto bad = row(1, 1, 0, 7, 0);
  CHECK_FALSE(check_compliant(f.compliance, f.schema, bad, bad));

  CHECK_THROWS_AS(default_compliance(ClassLabel::Normal), ConfigError);
  for (auto c : kAttackClasses) CHECK_FALSE(default_compliance(c).protected_fields.empty());
}

TEST_CASE("marginals are empirical frequencies") {
  const auto schema = toy_schema();
  LabeledDataset src;
  src.schema = schema;
  src.add(row(1, 1, 0), ClassLabel::Deletion, 1);
  src.add(row(1, 1, 0), ClassLabel::Deletion, 2);
  src.add(row(kNaN, 1, 1), ClassLabel::Deletion, 3);
  const auto m = estimate_marginals(src, toy_j());
  CHECK(m.probability(kColour, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(m.probability(kColour, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(m.probability(kColour, 2) == 0.0);
  CHECK(m.probability(kA, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(m.probability(kA, kNaN) == doctest::Approx(1.0 / 3.0));
  CHECK(m.probability(kB, 1) == 1.0);

  Rng rng(1);
  int zero = 0;
  for (int i = 0; i < 3000; ++i) zero += m.sample(kColour, rng) == 0.0;
  CHECK(zero / 3000.0 == doctest::Approx(2.0 / 3.0).epsilon(0.05));

  LabeledDataset empty;
  empty.schema = schema;
  CHECK_THROWS_AS(estimate_marginals(empty, toy_j()), MarginalsError);
  FeasibleSet narrow = toy_j();
  narrow.narrowed_range[kB] = Interval{50, 60};
  CHECK_THROWS_AS(estimate_marginals(src, narrow), MarginalsError);
}

TEST_CASE("query budget checks every candidate and counts queries") {
  const Fixture f;
  const FunctionOracle oracle(sum_ab, 10);
  QueryBudget budget(oracle, f.schema, f.x, f.J, &f.compliance, 2, true);
  CHECK_THROWS_AS(budget.fitness(row(90, 90, 0, 8)), ConstraintViolation);
  CHECK_THROWS_AS(budget.fitness(row(90, 90, 0, 7, 0)), ConstraintViolation);
  CHECK(budget.used() == 0);
  CHECK(budget.fitness(row(5, 0)) == 0.0);
  CHECK(budget.fitness(row(50, 0)) == 40.0);
  CHECK_THROWS_AS(budget.fitness(f.x), BudgetExhausted);
  const auto trace = budget.take_trace();
  REQUIRE(trace.size() == 2);
  CHECK(trace[1] == std::pair<int, double>{2, 40.0});
}

TEST_CASE("random search") {
  Fixture f;
  const FunctionOracle oracle(sum_ab, 10);
  Rng rng(3);

  SUBCASE("one query by default") {
    const AttackContext ctx{oracle, f.schema, f.J, f.marginals, &f.compliance};
    const auto o = rs_attack(f.x, ctx, config(Algorithm::RS), rng);
    CHECK(o.queries_used == 1);
    CHECK(o.initial_fitness == 170.0);
    CHECK(check_feasible(f.x, o.best_candidate, f.J, f.schema));
  }
  SUBCASE("retries stop at the first evasion or the retry count") {
    const FunctionOracle never([](const FeatureVector&) { return 5.0; }, 1.0);
    const AttackContext ctx{never, f.schema, f.J, f.marginals, &f.compliance};
    auto cfg = config(Algorithm::RS);
    cfg.rs_retries = 5;
    const auto o = rs_attack(f.x, ctx, cfg, rng);
    CHECK(o.queries_used == 5);
    CHECK_FALSE(o.evaded);
    CHECK(o.best_fitness == 4.0);
  }
  SUBCASE("empty J submits the original") {
    const FeasibleSet none;
    const Marginals no_marginals;
    const AttackContext ctx{oracle, f.schema, none, no_marginals, &f.compliance};
    auto cfg = config(Algorithm::RS);
    cfg.rs_retries = 4;
    const auto o = rs_attack(f.x, ctx, cfg, rng);
    CHECK(o.queries_used == 1);
    CHECK(identical(o.best_candidate, f.x));
    CHECK_FALSE(o.evaded);
  }
}

TEST_CASE("an oracle blind to J cannot be evaded") {
  Fixture f;
  const FunctionOracle blind([](const FeatureVector& x) { return x.numerical(0); }, 1.0);
  const AttackContext ctx{blind, f.schema, f.J, f.marginals, &f.compliance};
  for (auto a : {Algorithm::RS, Algorithm::GA_DE, Algorithm::GA_ES}) {
    Rng rng(5);
    const auto o = run_attack(f.x, ctx, config(a), rng);
    CHECK_FALSE(o.evaded);
    CHECK(o.best_fitness == o.initial_fitness);
  }
}

TEST_CASE("genetic attacks stop at the first evading candidate") {
  Fixture f;
  // Half the marginal mass of a evades.
  const FunctionOracle oracle([](const FeatureVector& x) { return std::isnan(x.numerical(1)) ? 100 : x.numerical(1); },
                              50.0);
  const AttackContext ctx{oracle, f.schema, f.J, f.marginals, &f.compliance};
  for (auto a : {Algorithm::GA_DE, Algorithm::GA_ES}) {
    Rng rng(7);
    const auto o = run_attack(f.x, ctx, config(a), rng);
    CHECK(o.evaded);
    CHECK(o.best_fitness == 0.0);
    CHECK(o.queries_used <= 20);
    CHECK(o.trace.back().second == 0.0);
  }
}

TEST_CASE("genetic attack outcomes are consistent with their traces") {
  Fixture f;
  const FunctionOracle oracle(sum_ab, 1.0);
  const AttackContext ctx{oracle, f.schema, f.J, f.marginals, &f.compliance};
  for (auto a : {Algorithm::GA_DE, Algorithm::GA_ES}) {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      Rng r1(seed), r2(seed);
      const auto o = run_attack(f.x, ctx, config(a), r1);
      const auto p = run_attack(f.x, ctx, config(a), r2);
      CHECK(o.queries_used <= 100);
      CHECK(o.trace.size() == static_cast<std::size_t>(o.queries_used));
      CHECK(o.best_fitness == min_trace(o));
      CHECK(o.evaded == (o.best_fitness == 0.0));
      CHECK(o.best_fitness <= o.initial_fitness);
      CHECK(check_feasible(f.x, o.best_candidate, f.J, f.schema));
      CHECK(check_compliant(f.compliance, f.schema, f.x, o.best_candidate));
      CHECK(identical(o.best_candidate, p.best_candidate));
      CHECK(o.trace == p.trace);
      for (std::size_t q = 0; q < o.trace.size(); ++q) CHECK(o.trace[q].first == static_cast<int>(q) + 1);
    }
  }
}

TEST_CASE("evolution strategy without variation never improves on its initial population") {
  Fixture f;
  // Nothing evades, so the whole budget is spent.
  const FunctionOracle oracle(sum_ab, -1.0);
  const AttackContext ctx{oracle, f.schema, f.J, f.marginals, &f.compliance};
  auto cfg = config(Algorithm::GA_ES);
  cfg.recombination_ratio = 0.0;
  cfg.mutation_rate = 0.0;
  Rng rng(11);
  const auto o = ga_es_attack(f.x, ctx, cfg, rng);
  REQUIRE(o.trace.size() == 100);
  double init_best = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < 20; ++q) init_best = std::min(init_best, o.trace[q].second);
  CHECK(o.best_fitness == init_best);
  CHECK_FALSE(o.evaded);
}

TEST_CASE("budgets smaller than the population") {
  Fixture f;
  const FunctionOracle oracle(sum_ab, 1.0);
  const AttackContext ctx{oracle, f.schema, f.J, f.marginals, &f.compliance};
  for (auto a : {Algorithm::RS, Algorithm::GA_DE, Algorithm::GA_ES}) {
    auto cfg = config(a);
    cfg.budget = 1;
    Rng rng(13);
    CHECK(run_attack(f.x, ctx, cfg, rng).queries_used == 1);
  }
  auto bad = config(Algorithm::GA_DE);
  bad.budget = 0;
  Rng rng(1);
  CHECK_THROWS_AS(run_attack(f.x, ctx, bad, rng), ConfigError);
}

TEST_CASE("campaign") {
  Fixture f;
  LabeledDataset samples;
  samples.schema = f.schema;
  samples.add(row(90, 90), ClassLabel::Deletion, 1);
  samples.add(row(80, 70, 1), ClassLabel::Deletion, 2);
  samples.add(row(1, 1), ClassLabel::Deletion, 3);               // not detected
  samples.add(row(90, 90, 0, 7, 0), ClassLabel::Deletion, 4);    // violates its own rules
  samples.add(row(90, 90), ClassLabel::Flood, 5);                // no setup
  samples.add(row(90, 90), ClassLabel::Normal, 6);               // never attacked
  std::map<ClassLabel, ClassSetup> setup;
  setup.emplace(ClassLabel::Deletion, ClassSetup{f.J, f.marginals, f.compliance});

  // The oracle re-checks every query on its own and counts it per sample.
  std::size_t checked = 0, bad = 0;
  const FeatureVector* current = nullptr;
  const FunctionOracle oracle(
      [&](const FeatureVector& c) {
        ++checked;
        if (current && !(check_feasible(*current, c, f.J, f.schema) && check_compliant(f.compliance, f.schema, *current, c)))
          ++bad;
        return sum_ab(c);
      },
      10.0);

  for (auto a : {Algorithm::RS, Algorithm::GA_DE, Algorithm::GA_ES}) {
    checked = bad = 0;
    const WarningCapture warnings;
    const auto c = run_campaign(oracle, samples, setup, config(a, 42));
    CHECK(warnings.contains("no feasible set for Flood"));
    CHECK(warnings.contains("violate their own compliance rules"));
    CHECK(c.samples == 5);
    CHECK(c.undetected == 1);
    CHECK(c.skipped == 2);
    REQUIRE(c.outcomes.size() == 2);
    CHECK(c.outcomes[0].sample == 0);
    CHECK(c.outcomes[1].sample == 1);
    CHECK(c.total_queries <= 200);
    CHECK(c.max_queries <= 100);
    if (a == Algorithm::RS) CHECK(c.total_queries == 2);
    std::size_t sum = 0;
    for (const auto& o : c.outcomes) sum += static_cast<std::size_t>(o.queries_used);
    CHECK(sum == c.total_queries);

    const auto again = run_campaign(oracle, samples, setup, config(a, 42));
    for (std::size_t i = 0; i < c.outcomes.size(); ++i) CHECK(again.outcomes[i].trace == c.outcomes[i].trace);
  }

  // Independent feasibility check of each queried candidate against its own original.
  for (std::size_t i = 0; i < 2; ++i) {
    current = &samples.rows[i];
    LabeledDataset one;
    one.schema = f.schema;
    one.add(samples.rows[i], ClassLabel::Deletion, 1);
    checked = bad = 0;
    const auto c = run_campaign(oracle, one, setup, config(Algorithm::GA_DE, 42));
    // Besides the budgeted candidates, only the detection check scores the original.
    CHECK(checked == c.total_queries + 1);
    CHECK(bad == 0);
  }
}

TEST_CASE("J-config parsing and disjointness") {
  const auto schema = toy_schema();
  const auto j = nlohmann::json::parse(R"({
    "Deletion": ["pfcp.b", "pfcp.a", "pfcp.a"],
    "Flood": {"features": ["pfcp.a", "pfcp.colour"],
              "domains": {"pfcp.a": {"lo": 1, "hi": 2}, "pfcp.colour": {"labels": ["y"]}}}
  })");
  const auto m = parse_j_config(j, schema);
  CHECK(m.at(ClassLabel::Deletion).indices == std::vector<std::size_t>{kA, kB});
  const auto& flood = m.at(ClassLabel::Flood);
  CHECK(flood.narrowed_range.at(kA) == Interval{1, 2});
  CHECK(flood.narrowed_codes.at(kColour) == std::vector<int>{1});

  CHECK_THROWS_AS(parse_j_config(nlohmann::json::parse(R"({"Normal": ["pfcp.a"]})"), schema), ConfigError);
  CHECK_THROWS_AS(parse_j_config(nlohmann::json::parse(R"({"Flood": ["nope"]})"), schema), ConfigError);
  CHECK_THROWS_AS(parse_j_config(nlohmann::json::parse(R"({"Flood": {"features": ["pfcp.a"], "domains": {"pfcp.b": {"lo": 0, "hi": 1}}}})"), schema),
                  ConfigError);
  CHECK_THROWS_AS(parse_j_config(nlohmann::json::parse(R"({"Flood": {"features": ["pfcp.colour"], "domains": {"pfcp.colour": {"labels": ["w"]}}}})"), schema),
                  ConfigError);
  CHECK_THROWS_AS(load_j_config("/nonexistent/j.json", schema), IoError);

  FeasibleSet J;
  J.indices = {kSeid, kA};
  CHECK_THROWS_AS(check_disjoint(J, default_compliance(ClassLabel::Deletion), schema), ConfigError);
  J.indices = {kA};
  CHECK_NOTHROW(check_disjoint(J, default_compliance(ClassLabel::Deletion), schema));
}

TEST_CASE("algorithm names") {
  CHECK(parse_algorithm("rs") == Algorithm::RS);
  CHECK(parse_algorithm("GA-DE") == Algorithm::GA_DE);
  CHECK(parse_algorithm("ga_es") == Algorithm::GA_ES);
  CHECK_FALSE(parse_algorithm("pso").has_value());
  for (auto a : {Algorithm::RS, Algorithm::GA_DE, Algorithm::GA_ES}) CHECK(parse_algorithm(algorithm_name(a)) == a);
}

TEST_CASE("outcome records list the changed fields decoded") {
  Fixture f;
  AttackOutcome o;
  o.original = f.x;
  o.best_candidate = row(10, 90, 2);
  o.best_fitness = 0;
  o.evaded = true;
  o.queries_used = 3;
  o.attack_class = ClassLabel::Deletion;
  o.trace = {{1, 5.0}, {2, 1.0}, {3, 0.0}};
  const auto j = outcome_json(o, f.schema, "HBOS", Algorithm::GA_DE, false, true);
  const auto text = j.dump();
  CHECK(text.find("pfcp.a") != std::string::npos);
  CHECK(text.find("pfcp.colour") != std::string::npos);
  CHECK(text.find("\"z\"") != std::string::npos);
  CHECK(text.find("pfcp.b") == std::string::npos);
  CHECK(j.contains("trace"));
  CHECK_FALSE(outcome_json(o, f.schema, "HBOS", Algorithm::GA_DE, false, false).contains("trace"));
}
