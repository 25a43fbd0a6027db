#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pfad/oracle.hpp"
#include "pfad/rng.hpp"
#include "pfad/traffic_model.hpp"

namespace pfad {

// Attacker-modifiable feature positions of the input schema, each with its
// value domain (the schema's, optionally narrowed). Without narrowing, the
// missing marker (field absent from the packet) and UNKNOWN are in domain.
struct FeasibleSet {
  std::vector<std::size_t> indices;  // sorted, distinct
  std::map<std::size_t, Interval> narrowed_range;
  std::map<std::size_t, std::vector<int>> narrowed_codes;

  bool contains(std::size_t i) const;
  bool in_domain(const FeatureSchema& schema, std::size_t i, double value) const;
  bool in_domain_code(const FeatureSchema& schema, std::size_t i, int code) const;
};

enum class Relation { eq, ne, gt, ge, lt, le };
std::string_view relation_name(Relation r);

struct Predicate {
  std::string feature;
  Relation relation = Relation::eq;
  double constant = 0.0;
};

struct ComplianceSpec {
  ClassLabel attack_class = ClassLabel::Flood;
  std::set<std::string> protected_fields;
  std::vector<Predicate> predicates;
};

// Built-in protected fields and predicates per attack class.
ComplianceSpec default_compliance(ClassLabel attack_class);

// Feature value used by predicates: categorical labels read as numbers,
// numericals as is. NaN when missing or not numeric.
double predicate_value(const FeatureSchema& schema, const FeatureVector& x, std::size_t i);
bool holds(const Predicate& p, const FeatureSchema& schema, const FeatureVector& x);

bool check_feasible(const FeatureVector& x, const FeatureVector& candidate, const FeasibleSet& J,
                    const FeatureSchema& schema);
// All predicates hold and protected fields keep the original's values.
bool check_compliant(const ComplianceSpec& spec, const FeatureSchema& schema, const FeatureVector& original,
                     const FeatureVector& candidate);

// Per index: category codes with frequencies, or the multiset of observed values.
struct Marginal {
  bool categorical = false;
  std::vector<int> codes;
  std::vector<double> weights;
  std::vector<double> values;  // sorted
  std::size_t missing = 0;     // numerical sources with the field absent
};

struct Marginals {
  std::map<std::size_t, Marginal> per_index;
  double sample(std::size_t i, Rng& rng) const;  // returns a code as double for categoricals
  double probability(std::size_t i, double value) const;
};

// Out-of-domain source values are skipped; absent fields count as a value. Throws MarginalsError
// when source is empty or an index of J has no admissible value.
Marginals estimate_marginals(const LabeledDataset& source, const FeasibleSet& J);

enum class Algorithm { RS, GA_DE, GA_ES };
std::string_view algorithm_name(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view s);  // accepts rs, ga-de, ga_de, ...

struct AttackConfig {
  Algorithm algorithm = Algorithm::GA_DE;
  int popsize = 20;
  int budget = 100;
  double differential_weight = 0.5;
  double recombination_ratio = 0.9;
  std::optional<double> mutation_rate;  // default 1 / |J|
  int rs_retries = 1;                   // candidates drawn by RS
  std::uint64_t seed = 42;
  bool record_trace = true;
};

void validate_attack_config(const AttackConfig& cfg);

struct AttackOutcome {
  std::size_t sample = 0;
  ClassLabel attack_class = ClassLabel::Flood;
  FeatureVector original;
  FeatureVector best_candidate;
  double initial_fitness = 0.0;
  double best_fitness = 0.0;
  int queries_used = 0;
  bool evaded = false;
  std::vector<std::pair<int, double>> trace;  // (query number, fitness)
};

// Positive part of score - tau.
inline double fitness_value(double score, double tau) { return score > tau ? score - tau : 0.0; }

// Budgeted fitness evaluation. Every candidate is checked for feasibility and
// compliance before the oracle sees it; a breach throws ConstraintViolation.
class QueryBudget {
 public:
  QueryBudget(const ScoreOracle& oracle, const FeatureSchema& schema, const FeatureVector& original,
              const FeasibleSet& J, const ComplianceSpec* compliance, int budget, bool record_trace);

  // Consumes one query. Throws BudgetExhausted when none is left.
  double fitness(const FeatureVector& candidate);
  int used() const { return used_; }
  int remaining() const { return budget_ - used_; }
  std::vector<std::pair<int, double>> take_trace() { return std::move(trace_); }

 private:
  const ScoreOracle& oracle_;
  const FeatureSchema& schema_;
  const FeatureVector& original_;
  const FeasibleSet& J_;
  const ComplianceSpec* compliance_;
  int budget_;
  int used_ = 0;
  bool record_trace_;
  std::vector<std::pair<int, double>> trace_;
};

struct AttackContext {
  const ScoreOracle& oracle;
  const FeatureSchema& schema;
  const FeasibleSet& J;
  const Marginals& marginals;
  const ComplianceSpec* compliance = nullptr;
  // Score of the original when the caller already has it (the detection
  // check); otherwise the attack asks the oracle once, outside the budget.
  std::optional<double> original_score;
};

// Each runs on a sample the detector flags and returns the best candidate seen.
AttackOutcome rs_attack(const FeatureVector& x, const AttackContext& ctx, const AttackConfig& cfg, Rng& rng);
AttackOutcome ga_de_attack(const FeatureVector& x, const AttackContext& ctx, const AttackConfig& cfg, Rng& rng);
AttackOutcome ga_es_attack(const FeatureVector& x, const AttackContext& ctx, const AttackConfig& cfg, Rng& rng);
AttackOutcome run_attack(const FeatureVector& x, const AttackContext& ctx, const AttackConfig& cfg, Rng& rng);

struct ClassSetup {
  FeasibleSet J;
  Marginals marginals;
  ComplianceSpec compliance;
};

struct Campaign {
  std::vector<AttackOutcome> outcomes;
  std::size_t samples = 0;        // attack rows offered
  std::size_t undetected = 0;     // filtered out before attacking
  std::size_t skipped = 0;        // no setup for the class, or non-compliant original
  std::size_t total_queries = 0;
  int max_queries = 0;
};

// Attacks every initially detected row of samples (attack classes only) with
// a per-sample stream derive_seed(seed, "attack/sample", row index).
// before_sample, when set, is called with the row index before the row is first scored.
Campaign run_campaign(const ScoreOracle& oracle, const LabeledDataset& samples,
                      const std::map<ClassLabel, ClassSetup>& setup, const AttackConfig& cfg,
                      const std::function<void(std::size_t)>& before_sample = {});

// J-config: {"<class>": ["feature", ...]} or {"<class>": {"features": [...],
// "domains": {"feature": {"lo":, "hi":} | {"labels": [...]}}}}.
std::map<ClassLabel, FeasibleSet> parse_j_config(const nlohmann::json& j, const FeatureSchema& schema);
std::map<ClassLabel, FeasibleSet> load_j_config(const std::string& path, const FeatureSchema& schema);
// Throws ConfigError when J touches a protected field of the class.
void check_disjoint(const FeasibleSet& J, const ComplianceSpec& spec, const FeatureSchema& schema);

// One JSON object per outcome; changed fields are reported decoded.
nlohmann::ordered_json outcome_json(const AttackOutcome& o, const FeatureSchema& schema, const std::string& model,
                                    Algorithm algorithm, bool scaled, bool with_trace);

}  // namespace pfad
