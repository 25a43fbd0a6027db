#include "pfad/attack.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "pfad/errors.hpp"
#include "pfad/log.hpp"

namespace pfad {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kRepairAttempts = 32;

double raw_value(const FeatureSchema& schema, const FeatureVector& x, std::size_t i) {
  const auto s = schema.slot(i);
  return schema[i].is_categorical() ? static_cast<double>(x.categorical[s]) : x.numerical(static_cast<Eigen::Index>(s));
}

void set_value(const FeatureSchema& schema, FeatureVector& x, std::size_t i, double v) {
  const auto s = schema.slot(i);
  if (schema[i].is_categorical()) x.categorical[s] = static_cast<int>(v);
  else x.numerical(static_cast<Eigen::Index>(s)) = v;
}

bool same_value(const FeatureSchema& schema, const FeatureVector& a, const FeatureVector& b, std::size_t i) {
  const double u = raw_value(schema, a, i), v = raw_value(schema, b, i);
  return u == v || (std::isnan(u) && std::isnan(v));
}

std::optional<double> label_number(const std::string& s) {
  double v = 0;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    unsigned long long h = 0;
    auto [p, ec] = std::from_chars(s.data() + 2, s.data() + s.size(), h, 16);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return static_cast<double>(h);
  }
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<Interval> range_of(const FeatureSchema& schema, const FeasibleSet& J, std::size_t i) {
  if (auto it = J.narrowed_range.find(i); it != J.narrowed_range.end()) return it->second;
  return schema[i].range;
}

FeatureVector sample_candidate(const FeatureVector& x, const AttackContext& ctx, Rng& rng) {
  FeatureVector c = x;
  for (std::size_t j : ctx.J.indices) set_value(ctx.schema, c, j, ctx.marginals.sample(j, rng));
  return c;
}

// Resamples J genes that break a predicate; falls back to the original value,
// which is compliant by precondition.
void repair(FeatureVector& c, const FeatureVector& x, const AttackContext& ctx, Rng& rng) {
  if (!ctx.compliance) return;
  const auto& spec = *ctx.compliance;
  for (const auto& name : spec.protected_fields) {
    const auto i = ctx.schema.find(name);
    if (i && ctx.J.contains(*i)) set_value(ctx.schema, c, *i, raw_value(ctx.schema, x, *i));
  }
  for (int attempt = 0; attempt <= kRepairAttempts; ++attempt) {
    bool ok = true;
    for (const auto& p : spec.predicates) {
      if (holds(p, ctx.schema, c)) continue;
      ok = false;
      const auto i = ctx.schema.find(p.feature);
      if (!i || !ctx.J.contains(*i)) continue;
      const double v = attempt < kRepairAttempts ? ctx.marginals.sample(*i, rng) : raw_value(ctx.schema, x, *i);
      set_value(ctx.schema, c, *i, v);
    }
    if (ok) return;
  }
}

struct Tracker {
  FeatureVector best;
  double best_fitness = std::numeric_limits<double>::infinity();
  void offer(const FeatureVector& c, double f) {
    if (f < best_fitness) {
      best_fitness = f;
      best = c;
    }
  }
};

AttackOutcome finish(const FeatureVector& x, QueryBudget& budget, Tracker& tracker, double initial) {
  AttackOutcome o;
  o.original = x;
  o.initial_fitness = initial;
  if (budget.used() == 0) {
    o.best_candidate = x;
    o.best_fitness = initial;
  } else {
    o.best_candidate = tracker.best;
    o.best_fitness = tracker.best_fitness;
  }
  o.queries_used = budget.used();
  o.evaded = o.best_fitness == 0.0;
  o.trace = budget.take_trace();
  return o;
}

// Evaluates the initial population; stops early on a zero-fitness individual
// or an exhausted budget.
bool init_population(const FeatureVector& x, const AttackContext& ctx, const AttackConfig& cfg, Rng& rng,
                     QueryBudget& budget, Tracker& tracker, std::vector<FeatureVector>& pop, std::vector<double>& fit) {
  for (int i = 0; i < cfg.popsize && budget.remaining() > 0; ++i) {
    FeatureVector c = sample_candidate(x, ctx, rng);
    repair(c, x, ctx, rng);
    const double f = budget.fitness(c);
    tracker.offer(c, f);
    pop.push_back(std::move(c));
    fit.push_back(f);
    if (f == 0.0) return true;
  }
  return false;
}

}  // namespace

bool FeasibleSet::contains(std::size_t i) const { return std::binary_search(indices.begin(), indices.end(), i); }

bool FeasibleSet::in_domain(const FeatureSchema& schema, std::size_t i, double value) const {
  if (schema[i].is_categorical()) return in_domain_code(schema, i, static_cast<int>(value)) && value == std::floor(value);
  if (std::isnan(value)) return !narrowed_range.contains(i);
  if (!std::isfinite(value)) return false;
  if (schema[i].integral && value != std::floor(value)) return false;
  if (auto it = narrowed_range.find(i); it != narrowed_range.end() && !it->second.contains(value)) return false;
  return !schema[i].range || schema[i].range->contains(value);
}

bool FeasibleSet::in_domain_code(const FeatureSchema& schema, std::size_t i, int code) const {
  if (auto it = narrowed_codes.find(i); it != narrowed_codes.end())
    return std::find(it->second.begin(), it->second.end(), code) != it->second.end();
  if (code == kMissingCode || code == kUnknownCode) return true;
  return code >= 0 && static_cast<std::size_t>(code) < schema[i].labels.size();
}

std::string_view relation_name(Relation r) {
  switch (r) {
    case Relation::eq: return "=";
    case Relation::ne: return "!=";
    case Relation::gt: return ">";
    case Relation::ge: return ">=";
    case Relation::lt: return "<";
    case Relation::le: return "<=";
  }
  return "?";
}

ComplianceSpec default_compliance(ClassLabel c) {
  ComplianceSpec s;
  s.attack_class = c;
  switch (c) {
    case ClassLabel::RestorationTEID:
      s.protected_fields = {"pfcp.f_teid.teid", "pfcp.msg_type"};
      s.predicates = {{"pfcp.f_teid.teid", Relation::gt, 65536}};
      break;
    case ClassLabel::Flood:
      s.protected_fields = {"pfcp.msg_type"};
      s.predicates = {{"pfcp.msg_type", Relation::eq, 50}};
      break;
    case ClassLabel::Deletion:
      s.protected_fields = {"pfcp.msg_type", "pfcp.s", "pfcp.seid"};
      s.predicates = {{"pfcp.msg_type", Relation::eq, 54}, {"pfcp.s", Relation::eq, 1}};
      break;
    case ClassLabel::Modification:
      s.protected_fields = {"pfcp.msg_type",         "pfcp.apply_action.forw",        "pfcp.apply_action.buff",
                            "pfcp.apply_action.nocp", "pfcp.outer_hdr_creation.teid", "pfcp.dst_interface"};
      s.predicates = {{"pfcp.msg_type", Relation::eq, 52}, {"pfcp.apply_action.forw", Relation::eq, 0}};
      break;
    case ClassLabel::PDN0Fault:
      s.protected_fields = {"pfcp.pdn_type", "pfcp.msg_type"};
      s.predicates = {{"pfcp.pdn_type", Relation::eq, 0}};
      break;
    case ClassLabel::Normal:
      throw ConfigError("no compliance rules exist for benign traffic");
  }
  return s;
}

double predicate_value(const FeatureSchema& schema, const FeatureVector& x, std::size_t i) {
  const auto& d = schema[i];
  if (!d.is_categorical()) return x.numerical(static_cast<Eigen::Index>(schema.slot(i)));
  const int code = x.categorical[schema.slot(i)];
  if (code < 0 || static_cast<std::size_t>(code) >= d.labels.size()) return kNaN;
  return label_number(d.labels[static_cast<std::size_t>(code)]).value_or(kNaN);
}

bool holds(const Predicate& p, const FeatureSchema& schema, const FeatureVector& x) {
  const auto i = schema.find(p.feature);
  if (!i) return false;
  const double v = predicate_value(schema, x, *i);
  if (std::isnan(v)) return false;
  switch (p.relation) {
    case Relation::eq: return v == p.constant;
    case Relation::ne: return v != p.constant;
    case Relation::gt: return v > p.constant;
    case Relation::ge: return v >= p.constant;
    case Relation::lt: return v < p.constant;
    case Relation::le: return v <= p.constant;
  }
  return false;
}

bool check_feasible(const FeatureVector& x, const FeatureVector& c, const FeasibleSet& J, const FeatureSchema& schema) {
  if (x.categorical.size() != schema.n_categorical() || c.categorical.size() != schema.n_categorical() ||
      static_cast<std::size_t>(x.numerical.size()) != schema.n_numerical() ||
      static_cast<std::size_t>(c.numerical.size()) != schema.n_numerical())
    return false;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (J.contains(i)) {
      if (!J.in_domain(schema, i, raw_value(schema, c, i))) return false;
    } else if (!same_value(schema, x, c, i)) {
      return false;
    }
  }
  return true;
}

bool check_compliant(const ComplianceSpec& spec, const FeatureSchema& schema, const FeatureVector& original,
                     const FeatureVector& c) {
  for (const auto& name : spec.protected_fields) {
    const auto i = schema.find(name);
    if (i && !same_value(schema, original, c, *i)) return false;
  }
  return std::all_of(spec.predicates.begin(), spec.predicates.end(),
                     [&](const Predicate& p) { return holds(p, schema, c); });
}

double Marginals::sample(std::size_t i, Rng& rng) const {
  const auto it = per_index.find(i);
  if (it == per_index.end()) throw MarginalsError("no marginal for feature index " + std::to_string(i));
  const Marginal& m = it->second;
  if (m.categorical) return static_cast<double>(m.codes[rng.weighted(m.weights)]);
  const auto k = rng.below(m.values.size() + m.missing);
  return k < m.values.size() ? m.values[k] : std::numeric_limits<double>::quiet_NaN();
}

double Marginals::probability(std::size_t i, double value) const {
  const auto it = per_index.find(i);
  if (it == per_index.end()) return 0.0;
  const Marginal& m = it->second;
  if (m.categorical) {
    const double total = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
    for (std::size_t k = 0; k < m.codes.size(); ++k)
      if (m.codes[k] == static_cast<int>(value)) return m.weights[k] / total;
    return 0.0;
  }
  const auto total = static_cast<double>(m.values.size() + m.missing);
  if (std::isnan(value)) return static_cast<double>(m.missing) / total;
  const auto [lo, hi] = std::equal_range(m.values.begin(), m.values.end(), value);
  return static_cast<double>(hi - lo) / total;
}

Marginals estimate_marginals(const LabeledDataset& source, const FeasibleSet& J) {
  if (source.empty()) throw MarginalsError("marginal source is empty");
  const auto& schema = source.schema;
  Marginals out;
  for (std::size_t j : J.indices) {
    Marginal m;
    m.categorical = schema[j].is_categorical();
    if (m.categorical) {
      std::map<int, double> counts;
      for (const auto& row : source.rows) {
        const int code = row.categorical[schema.slot(j)];
        if (J.in_domain_code(schema, j, code)) counts[code] += 1.0;
      }
      for (const auto& [code, n] : counts) {
        m.codes.push_back(code);
        m.weights.push_back(n);
      }
      if (m.codes.empty()) throw MarginalsError("no admissible values for " + schema[j].name);
    } else {
      for (const auto& row : source.rows) {
        const double v = row.numerical(static_cast<Eigen::Index>(schema.slot(j)));
        if (!J.in_domain(schema, j, v)) continue;
        if (std::isnan(v))
          ++m.missing;
        else
          m.values.push_back(v);
      }
      if (m.values.empty() && m.missing == 0) throw MarginalsError("no admissible values for " + schema[j].name);
      std::sort(m.values.begin(), m.values.end());
    }
    out.per_index.emplace(j, std::move(m));
  }
  return out;
}

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::RS: return "RS";
    case Algorithm::GA_DE: return "GA_DE";
    case Algorithm::GA_ES: return "GA_ES";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view s) {
  std::string t;
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c))) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "rs" || t == "random" || t == "randomsearch") return Algorithm::RS;
  if (t == "gade" || t == "de") return Algorithm::GA_DE;
  if (t == "gaes" || t == "es") return Algorithm::GA_ES;
  return std::nullopt;
}

void validate_attack_config(const AttackConfig& c) {
  if (c.popsize < 1) throw ConfigError("popsize must be >= 1");
  if (c.budget < 1) throw ConfigError("budget must be >= 1");
  if (c.rs_retries < 1) throw ConfigError("rs_retries must be >= 1");
  if (!(c.differential_weight > 0)) throw ConfigError("differential weight must be > 0");
  if (c.recombination_ratio < 0 || c.recombination_ratio > 1) throw ConfigError("recombination ratio must lie in [0, 1]");
  if (c.mutation_rate && (*c.mutation_rate < 0 || *c.mutation_rate > 1)) throw ConfigError("mutation rate must lie in [0, 1]");
}

QueryBudget::QueryBudget(const ScoreOracle& oracle, const FeatureSchema& schema, const FeatureVector& original,
                         const FeasibleSet& J, const ComplianceSpec* compliance, int budget, bool record_trace)
    : oracle_(oracle), schema_(schema), original_(original), J_(J), compliance_(compliance), budget_(budget),
      record_trace_(record_trace) {}

double QueryBudget::fitness(const FeatureVector& c) {
  if (used_ >= budget_) throw BudgetExhausted("query budget of " + std::to_string(budget_) + " exhausted");
  if (!check_feasible(original_, c, J_, schema_)) throw ConstraintViolation("infeasible candidate reached the oracle");
  if (compliance_ && !check_compliant(*compliance_, schema_, original_, c))
    throw ConstraintViolation("non-compliant candidate reached the oracle");
  ++used_;
  const double f = fitness_value(oracle_.score(c), oracle_.threshold());
  if (record_trace_) trace_.emplace_back(used_, f);
  return f;
}

AttackOutcome rs_attack(const FeatureVector& x, const AttackContext& ctx, const AttackConfig& cfg, Rng& rng) {
  validate_attack_config(cfg);
  QueryBudget budget(ctx.oracle, ctx.schema, x, ctx.J, ctx.compliance, cfg.budget, cfg.record_trace);
  Tracker tracker;
  const double initial = fitness_value(ctx.original_score ? *ctx.original_score : ctx.oracle.score(x), ctx.oracle.threshold());
  const int draws = std::min(cfg.rs_retries, cfg.budget);
  for (int k = 0; k < draws; ++k) {
    FeatureVector c = sample_candidate(x, ctx, rng);
    repair(c, x, ctx, rng);
    const double f = budget.fitness(c);
    tracker.offer(c, f);
    if (f == 0.0 || ctx.J.indices.empty()) break;
  }
  return finish(x, budget, tracker, initial);
}

AttackOutcome ga_de_attack(const FeatureVector& x, const AttackContext& ctx, const AttackConfig& cfg, Rng& rng) {
  validate_attack_config(cfg);
  QueryBudget budget(ctx.oracle, ctx.schema, x, ctx.J, ctx.compliance, cfg.budget, cfg.record_trace);
  Tracker tracker;
  const double initial = fitness_value(ctx.original_score ? *ctx.original_score : ctx.oracle.score(x), ctx.oracle.threshold());
  std::vector<FeatureVector> pop;
  std::vector<double> fit;
  if (ctx.J.indices.empty()) {
    tracker.offer(x, budget.fitness(x));
    return finish(x, budget, tracker, initial);
  }
  if (init_population(x, ctx, cfg, rng, budget, tracker, pop, fit)) return finish(x, budget, tracker, initial);

  const auto& J = ctx.J.indices;
  const auto P = pop.size();
  auto pick_other = [&](std::vector<std::size_t> exclude) {
    if (P <= exclude.size()) return static_cast<std::size_t>(rng.below(P));
    while (true) {
      const auto k = static_cast<std::size_t>(rng.below(P));
      if (std::find(exclude.begin(), exclude.end(), k) == exclude.end()) return k;
    }
  };
  while (budget.remaining() > 0) {
    for (std::size_t i = 0; i < P && budget.remaining() > 0; ++i) {
      const auto a = pick_other({i});
      const auto b = pick_other({i, a});
      const auto c = pick_other({i, a, b});
      const auto m = J.size();
      const auto lo = static_cast<std::size_t>(rng.below(m));
      const auto hi = lo + 1 + static_cast<std::size_t>(rng.below(m - lo));
      FeatureVector trial = pop[i];
      for (std::size_t g = lo; g < hi; ++g) {
        const std::size_t j = J[g];
        if (ctx.schema[j].is_categorical()) {
          set_value(ctx.schema, trial, j, ctx.marginals.sample(j, rng));
          continue;
        }
        const double va = raw_value(ctx.schema, pop[a], j), vb = raw_value(ctx.schema, pop[b], j),
                     vc = raw_value(ctx.schema, pop[c], j);
        // An absent field has no arithmetic; the base vector's gene is kept.
        if (std::isnan(va) || std::isnan(vb) || std::isnan(vc)) {
          set_value(ctx.schema, trial, j, va);
          continue;
        }
        double v = va + cfg.differential_weight * (vb - vc);
        if (const auto r = range_of(ctx.schema, ctx.J, j)) {
          v = std::clamp(v, r->lo, r->hi);
          if (ctx.schema[j].integral) {
            v = std::round(v);
            if (v < r->lo) v = std::ceil(r->lo);
            if (v > r->hi) v = std::floor(r->hi);
          }
        } else if (ctx.schema[j].integral) {
          v = std::round(v);
        }
        set_value(ctx.schema, trial, j, v);
      }
      repair(trial, x, ctx, rng);
      const double f = budget.fitness(trial);
      tracker.offer(trial, f);
      if (f <= fit[i]) {
        pop[i] = std::move(trial);
        fit[i] = f;
      }
      if (f == 0.0) return finish(x, budget, tracker, initial);
    }
  }
  return finish(x, budget, tracker, initial);
}

AttackOutcome ga_es_attack(const FeatureVector& x, const AttackContext& ctx, const AttackConfig& cfg, Rng& rng) {
  validate_attack_config(cfg);
  QueryBudget budget(ctx.oracle, ctx.schema, x, ctx.J, ctx.compliance, cfg.budget, cfg.record_trace);
  Tracker tracker;
  const double initial = fitness_value(ctx.original_score ? *ctx.original_score : ctx.oracle.score(x), ctx.oracle.threshold());
  std::vector<FeatureVector> pop;
  std::vector<double> fit;
  if (ctx.J.indices.empty()) {
    tracker.offer(x, budget.fitness(x));
    return finish(x, budget, tracker, initial);
  }
  if (init_population(x, ctx, cfg, rng, budget, tracker, pop, fit)) return finish(x, budget, tracker, initial);

  const auto& J = ctx.J.indices;
  const double mutation = cfg.mutation_rate.value_or(1.0 / static_cast<double>(J.size()));
  const auto mu = pop.size();
  while (budget.remaining() > 0) {
    std::vector<FeatureVector> children;
    std::vector<double> child_fit;
    for (std::size_t k = 0; k < mu && budget.remaining() > 0; ++k) {
      const auto p1 = static_cast<std::size_t>(rng.below(mu));
      FeatureVector child = pop[p1];
      if (rng.bernoulli(cfg.recombination_ratio)) {
        const auto p2 = static_cast<std::size_t>(rng.below(mu));
        for (std::size_t j : J)
          if (rng.bernoulli(0.5)) set_value(ctx.schema, child, j, raw_value(ctx.schema, pop[p2], j));
      }
      for (std::size_t j : J)
        if (rng.bernoulli(mutation)) set_value(ctx.schema, child, j, ctx.marginals.sample(j, rng));
      repair(child, x, ctx, rng);
      const double f = budget.fitness(child);
      tracker.offer(child, f);
      if (f == 0.0) return finish(x, budget, tracker, initial);
      children.push_back(std::move(child));
      child_fit.push_back(f);
    }
    // Elitist (mu + lambda) survival; parents win ties.
    std::vector<std::size_t> order(mu + children.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto fitness_of = [&](std::size_t k) { return k < mu ? fit[k] : child_fit[k - mu]; };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness_of(a) < fitness_of(b); });
    std::vector<FeatureVector> next;
    std::vector<double> next_fit;
    for (std::size_t r = 0; r < mu; ++r) {
      const auto k = order[r];
      next.push_back(k < mu ? pop[k] : children[k - mu]);
      next_fit.push_back(fitness_of(k));
    }
    pop = std::move(next);
    fit = std::move(next_fit);
  }
  return finish(x, budget, tracker, initial);
}

AttackOutcome run_attack(const FeatureVector& x, const AttackContext& ctx, const AttackConfig& cfg, Rng& rng) {
  switch (cfg.algorithm) {
    case Algorithm::RS: return rs_attack(x, ctx, cfg, rng);
    case Algorithm::GA_DE: return ga_de_attack(x, ctx, cfg, rng);
    case Algorithm::GA_ES: return ga_es_attack(x, ctx, cfg, rng);
  }
  throw ConfigError("unknown attack algorithm");
}

Campaign run_campaign(const ScoreOracle& oracle, const LabeledDataset& samples,
                      const std::map<ClassLabel, ClassSetup>& setup, const AttackConfig& cfg,
                      const std::function<void(std::size_t)>& before_sample) {
  validate_attack_config(cfg);
  Campaign out;
  std::map<ClassLabel, std::size_t> missing_setup, non_compliant;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const ClassLabel label = samples.labels[i];
    if (!is_attack(label)) continue;
    ++out.samples;
    const auto it = setup.find(label);
    if (it == setup.end()) {
      ++missing_setup[label];
      ++out.skipped;
      continue;
    }
    const FeatureVector& x = samples.rows[i];
    if (!check_compliant(it->second.compliance, samples.schema, x, x)) {
      ++non_compliant[label];
      ++out.skipped;
      continue;
    }
    if (before_sample) before_sample(i);
    const double score = oracle.score(x);
    if (!is_anomalous(score, oracle.threshold())) {
      ++out.undetected;
      continue;
    }
    Rng rng(derive_seed(cfg.seed, "attack/sample", i));
    const AttackContext ctx{oracle, samples.schema, it->second.J, it->second.marginals, &it->second.compliance, score};
    AttackOutcome o = run_attack(x, ctx, cfg, rng);
    o.sample = i;
    o.attack_class = label;
    out.total_queries += static_cast<std::size_t>(o.queries_used);
    out.max_queries = std::max(out.max_queries, o.queries_used);
    out.outcomes.push_back(std::move(o));
  }
  for (const auto& [c, n] : missing_setup)
    warn("attack campaign: no feasible set for " + std::string(class_name(c)) + ", skipped " + std::to_string(n) + " samples");
  for (const auto& [c, n] : non_compliant)
    warn("attack campaign: " + std::to_string(n) + " " + std::string(class_name(c)) +
         " samples violate their own compliance rules and were skipped");
  if (out.outcomes.empty()) warn("attack campaign: no initially detected attack samples, nothing to attack");
  return out;
}

std::map<ClassLabel, FeasibleSet> parse_j_config(const nlohmann::json& j, const FeatureSchema& schema) {
  if (!j.is_object()) throw ConfigError("J-config must be a JSON object keyed by attack class");
  std::map<ClassLabel, FeasibleSet> out;
  for (const auto& [key, value] : j.items()) {
    const auto cls = parse_class(key);
    if (!cls || !is_attack(*cls)) throw ConfigError("J-config: '" + key + "' is not an attack class");
    const nlohmann::json& names = value.is_object() ? value.at("features") : value;
    if (!names.is_array()) throw ConfigError("J-config: features of " + key + " must be a list");
    FeasibleSet J;
    for (const auto& n : names) {
      const auto name = n.get<std::string>();
      const auto i = schema.find(name);
      if (!i) throw ConfigError("J-config: unknown feature '" + name + "' for " + key);
      J.indices.push_back(*i);
    }
    std::sort(J.indices.begin(), J.indices.end());
    J.indices.erase(std::unique(J.indices.begin(), J.indices.end()), J.indices.end());
    if (value.is_object() && value.contains("domains")) {
      for (const auto& [name, dom] : value.at("domains").items()) {
        const auto i = schema.find(name);
        if (!i || !J.contains(*i)) throw ConfigError("J-config: domain given for '" + name + "' outside J of " + key);
        if (schema[*i].is_categorical()) {
          std::vector<int> codes;
          for (const auto& l : dom.at("labels")) {
            const int code = encode_label(schema[*i], l.get<std::string>());
            if (code < 0) throw ConfigError("J-config: label '" + l.get<std::string>() + "' not in the domain of " + name);
            codes.push_back(code);
          }
          J.narrowed_codes[*i] = codes;
        } else {
          J.narrowed_range[*i] = Interval{dom.at("lo").get<double>(), dom.at("hi").get<double>()};
        }
      }
    }
    out[*cls] = std::move(J);
  }
  return out;
}

std::map<ClassLabel, FeasibleSet> load_j_config(const std::string& path, const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read J-config " + path);
  try {
    return parse_j_config(nlohmann::json::parse(in), schema);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void check_disjoint(const FeasibleSet& J, const ComplianceSpec& spec, const FeatureSchema& schema) {
  for (const auto& name : spec.protected_fields) {
    const auto i = schema.find(name);
    if (i && J.contains(*i))
      throw ConfigError("feasible set of " + std::string(class_name(spec.attack_class)) + " contains protected field " + name);
  }
  for (const auto& p : spec.predicates)
    if (!schema.find(p.feature))
      throw ConfigError("compliance predicate references unknown feature " + p.feature);
}

nlohmann::ordered_json outcome_json(const AttackOutcome& o, const FeatureSchema& schema, const std::string& model,
                                    Algorithm algorithm, bool scaled, bool with_trace) {
  auto value_json = [&](const FeatureVector& x, std::size_t i) -> nlohmann::ordered_json {
    if (schema[i].is_categorical()) {
      const int code = x.categorical[schema.slot(i)];
      if (code == kMissingCode) return nullptr;
      if (code < 0 || static_cast<std::size_t>(code) >= schema[i].labels.size()) return "<unknown>";
      return schema[i].labels[static_cast<std::size_t>(code)];
    }
    const double v = x.numerical(static_cast<Eigen::Index>(schema.slot(i)));
    if (std::isnan(v)) return nullptr;
    return v;
  };
  nlohmann::ordered_json changes = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (!same_value(schema, o.original, o.best_candidate, i))
      changes[schema[i].name] = {{"from", value_json(o.original, i)}, {"to", value_json(o.best_candidate, i)}};
  nlohmann::ordered_json j;
  j["sample"] = o.sample;
  j["class"] = class_name(o.attack_class);
  j["model"] = model;
  j["algorithm"] = algorithm_name(algorithm);
  j["scaled"] = scaled;
  j["initial_fitness"] = o.initial_fitness;
  j["best_fitness"] = o.best_fitness;
  j["queries_used"] = o.queries_used;
  j["evaded"] = o.evaded;
  j["changes"] = changes;
  if (with_trace) {
    nlohmann::ordered_json t = nlohmann::ordered_json::array();
    for (const auto& [q, f] : o.trace) t.push_back({q, f});
    j["trace"] = t;
  }
  return j;
}

}  // namespace pfad
