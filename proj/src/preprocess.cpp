#include "pfad/preprocess.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "pfad/errors.hpp"
#include "pfad/log.hpp"
#include "pfad/rng.hpp"
#include "pfad/stats.hpp"

namespace pfad {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool same_value(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

std::uint64_t bits(double v) {
  if (std::isnan(v)) return 0x7ff8000000000000ULL;
  if (v == 0.0) v = 0.0;  // fold -0
  std::uint64_t b;
  std::memcpy(&b, &v, sizeof b);
  return b;
}

}  // namespace

LabeledDataset select_columns(const LabeledDataset& ds, const std::vector<std::string>& names) {
  LabeledDataset out;
  out.schema = ds.schema.keep(names);
  std::vector<std::size_t> src(out.schema.size());
  for (std::size_t k = 0; k < out.schema.size(); ++k) src[k] = ds.schema.index_of(out.schema[k].name);
  out.rows.reserve(ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const FeatureVector& x = ds.rows[r];
    FeatureVector y;
    y.categorical.resize(out.schema.n_categorical());
    y.numerical.resize(static_cast<Eigen::Index>(out.schema.n_numerical()));
    for (std::size_t k = 0; k < out.schema.size(); ++k) {
      const std::size_t i = src[k];
      if (out.schema[k].is_categorical())
        y.categorical[out.schema.slot(k)] = x.categorical[ds.schema.slot(i)];
      else
        y.numerical(static_cast<Eigen::Index>(out.schema.slot(k))) =
            x.numerical(static_cast<Eigen::Index>(ds.schema.slot(i)));
    }
    out.add(std::move(y), ds.labels[r], ds.row_ids[r]);
  }
  return out;
}

FeatureSchema infer_domains(const FeatureSchema& schema, const LabeledDataset& train) {
  std::vector<FeatureDescriptor> features = schema.features();
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto& f = features[i];
    if (f.is_categorical() || f.range) continue;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    const auto s = static_cast<Eigen::Index>(schema.slot(i));
    for (const auto& x : train.rows) {
      const double v = x.numerical(s);
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo <= hi) f.range = Interval{lo, hi};
  }
  return FeatureSchema(std::move(features), schema.version());
}

std::map<Protocol, std::size_t> protocol_counts(const FeatureSchema& schema) {
  std::map<Protocol, std::size_t> out;
  for (const auto& f : schema.features()) ++out[f.protocol];
  return out;
}

LabeledDataset drop_environment_features(const LabeledDataset& ds, std::vector<DropEntry>* report,
                                         const std::vector<std::string>& extra_patterns) {
  std::vector<std::string> keep;
  for (const auto& f : ds.schema.features()) {
    const bool flagged = f.environment_dependent || matches_any(default_environment_patterns(), f.name) ||
                         matches_any(extra_patterns, f.name);
    if (!flagged) {
      keep.push_back(f.name);
    } else if (report) {
      report->push_back({f.name, "GT1", "environment-dependent field"});
    }
  }
  if (keep.size() == ds.schema.size()) return ds;
  return select_columns(ds, keep);
}

namespace {

bool present(const FeatureSchema& schema, const FeatureVector& x, std::size_t i) {
  if (schema[i].is_categorical()) return x.categorical[schema.slot(i)] != kMissingCode;
  return !std::isnan(x.numerical(static_cast<Eigen::Index>(schema.slot(i))));
}

bool side_protocol(Protocol p) { return p == Protocol::tcp || p == Protocol::icmp; }

}  // namespace

bool is_side_traffic(const FeatureSchema& schema, const FeatureVector& x) {
  bool side = false, control = false;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const Protocol p = schema[i].protocol;
    if (side_protocol(p))
      side = side || present(schema, x, i);
    else if (p == Protocol::udp || p == Protocol::pfcp)
      control = control || present(schema, x, i);
  }
  if (side && !control) return true;
  if (auto proto = schema.find("ip.proto")) {
    const auto& f = schema[*proto];
    if (f.is_categorical()) {
      const int code = x.categorical[schema.slot(*proto)];
      if (code >= 0 && static_cast<std::size_t>(code) < f.labels.size())
        return f.labels[static_cast<std::size_t>(code)] == "6" || f.labels[static_cast<std::size_t>(code)] == "1";
    } else {
      const double v = x.numerical(static_cast<Eigen::Index>(schema.slot(*proto)));
      return v == 6 || v == 1;
    }
  }
  return false;
}

LabeledDataset filter_control_plane(const LabeledDataset& ds, std::vector<DropEntry>* report,
                                    std::size_t* rows_removed) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < ds.size(); ++r)
    if (!is_side_traffic(ds.schema, ds.rows[r])) rows.push_back(r);
  if (rows_removed) *rows_removed = ds.size() - rows.size();
  std::vector<std::string> keep;
  for (const auto& f : ds.schema.features()) {
    if (!side_protocol(f.protocol))
      keep.push_back(f.name);
    else if (report)
      report->push_back({f.name, "GT2", std::string(protocol_name(f.protocol)) + " field outside the control plane"});
  }
  LabeledDataset out = rows.size() == ds.size() ? ds : ds.subset(rows);
  if (keep.size() == ds.schema.size()) return out;
  return select_columns(out, keep);
}

LabeledDataset drop_uninformative(const LabeledDataset& ds, std::vector<DropEntry>* report) {
  const auto& schema = ds.schema;
  const std::size_t n = ds.size();
  auto value = [&](std::size_t r, std::size_t i) -> double {
    if (schema[i].is_categorical()) return ds.rows[r].categorical[schema.slot(i)];
    return ds.rows[r].numerical(static_cast<Eigen::Index>(schema.slot(i)));
  };
  auto missing = [&](double v, std::size_t i) {
    return schema[i].is_categorical() ? v == kMissingCode : std::isnan(v);
  };

  std::vector<bool> drop(schema.size(), false);
  std::vector<std::uint64_t> hash(schema.size(), 0);
  for (std::size_t i = 0; i < schema.size(); ++i) {
    bool all_missing = true, constant = true;
    const double first = n ? value(0, i) : 0.0;
    std::uint64_t h = schema[i].is_categorical() ? 1 : 2;
    for (std::size_t r = 0; r < n; ++r) {
      const double v = value(r, i);
      all_missing = all_missing && missing(v, i);
      constant = constant && same_value(v, first);
      h = splitmix64(h ^ bits(v));
    }
    hash[i] = h;
    if (n == 0) continue;
    if (all_missing) {
      drop[i] = true;
      if (report) report->push_back({schema[i].name, "GT3", "all values missing"});
    } else if (constant) {
      drop[i] = true;
      if (report) report->push_back({schema[i].name, "GT3", "single unique value"});
    }
  }

  std::unordered_map<std::uint64_t, std::vector<std::size_t>> by_hash;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (drop[i]) continue;
    auto& bucket = by_hash[hash[i]];
    for (std::size_t j : bucket) {
      if (schema[j].kind != schema[i].kind) continue;
      bool equal = true;
      for (std::size_t r = 0; r < n && equal; ++r) equal = same_value(value(r, i), value(r, j));
      if (equal) {
        drop[i] = true;
        if (report) report->push_back({schema[i].name, "GT3", "duplicate of " + schema[j].name});
        break;
      }
    }
    if (!drop[i]) bucket.push_back(i);
  }

  std::vector<std::string> keep;
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (!drop[i]) keep.push_back(schema[i].name);
  if (keep.size() == schema.size()) return ds;
  return select_columns(ds, keep);
}

// ---------------------------------------------------------------- imputer

namespace {

// Row-major copy of the numerical block with NaN for missing values.
Eigen::MatrixXd numeric_block(const LabeledDataset& ds) {
  const auto p = static_cast<Eigen::Index>(ds.schema.n_numerical());
  Eigen::MatrixXd X(static_cast<Eigen::Index>(ds.size()), p);
  for (std::size_t r = 0; r < ds.size(); ++r) X.row(static_cast<Eigen::Index>(r)) = ds.rows[r].numerical.transpose();
  return X;
}

std::string numerical_name(const FeatureSchema& schema, std::size_t slot) {
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (!schema[i].is_categorical() && schema.slot(i) == slot) return schema[i].name;
  return "?";
}

std::string categorical_name(const FeatureSchema& schema, std::size_t slot) {
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (schema[i].is_categorical() && schema.slot(i) == slot) return schema[i].name;
  return "?";
}

// Least squares of column t of A on the other columns, using only the rows in
// `rows`. G is the Gram matrix of all of A; `others` are the rows not in `rows`.
Eigen::VectorXd regress(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G, Eigen::Index t,
                        const std::vector<Eigen::Index>& rows, const std::vector<Eigen::Index>& others) {
  Eigen::MatrixXd Gs;
  if (rows.size() <= others.size()) {
    const Eigen::MatrixXd Ar = A(rows, Eigen::all);
    Gs = Ar.transpose() * Ar;
  } else if (others.empty()) {
    Gs = G;
  } else {
    const Eigen::MatrixXd Ao = A(others, Eigen::all);
    Gs = G - Ao.transpose() * Ao;
  }
  const Eigen::Index q = A.cols();
  std::vector<Eigen::Index> cols;
  for (Eigen::Index c = 0; c < q; ++c)
    if (c != t) cols.push_back(c);
  // Small ridge keeps near-collinear fields (lengths of nested layers) well posed.
  Eigen::MatrixXd lhs = Gs(cols, cols);
  lhs.diagonal().array() += 1e-8 * static_cast<double>(rows.size());
  const Eigen::VectorXd rhs = Gs(cols, t);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(lhs);
  cod.setThreshold(1e-10);
  const Eigen::VectorXd beta = cod.solve(rhs);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(q);
  for (std::size_t k = 0; k < cols.size(); ++k) full(cols[k]) = beta(static_cast<Eigen::Index>(k));
  return full;
}

}  // namespace

ImputerState fit_imputer(const LabeledDataset& train, int max_rounds, double tol) {
  const auto& schema = train.schema;
  ImputerState st;
  st.max_rounds = max_rounds;
  st.tol = tol;

  // Categorical: most frequent valid code, smallest code on ties.
  st.categorical_fill.assign(schema.n_categorical(), kUnknownCode);
  for (std::size_t c = 0; c < schema.n_categorical(); ++c) {
    std::map<int, std::size_t> counts;
    bool any = false;
    for (const auto& x : train.rows) {
      if (x.categorical[c] >= 0) ++counts[x.categorical[c]];
      any = any || x.categorical[c] != kMissingCode;
    }
    std::size_t best = 0;
    for (const auto& [code, k] : counts) {
      if (k > best) {
        best = k;
        st.categorical_fill[c] = code;
      }
    }
    if (!any)
      warn("imputer: categorical feature '" + categorical_name(schema, c) +
           "' is missing in every training row; filling with UNKNOWN");
  }

  const auto p = static_cast<Eigen::Index>(schema.n_numerical());
  const auto n = static_cast<Eigen::Index>(train.size());
  st.median = Eigen::VectorXd::Zero(p);
  st.center = Eigen::VectorXd::Zero(p);
  st.scale = Eigen::VectorXd::Ones(p);
  st.coef = Eigen::MatrixXd::Zero(p, p + 1);
  st.lo = Eigen::VectorXd::Zero(p);
  st.hi = Eigen::VectorXd::Zero(p);
  if (p == 0) return st;

  Eigen::MatrixXd X = numeric_block(train);
  std::vector<std::vector<Eigen::Index>> obs(static_cast<std::size_t>(p)), miss(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    std::vector<double> values;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (std::isnan(X(r, j)))
        miss[static_cast<std::size_t>(j)].push_back(r);
      else {
        obs[static_cast<std::size_t>(j)].push_back(r);
        values.push_back(X(r, j));
      }
    }
    if (values.empty()) {
      warn("imputer: numerical feature '" + numerical_name(schema, static_cast<std::size_t>(j)) +
           "' is missing in every training row; filling with 0");
      continue;
    }
    st.median(j) = median(values);
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    st.lo(j) = *mn;
    st.hi(j) = *mx;
    const Moments m = moments(values);
    st.center(j) = m.mean;
    st.scale(j) = m.sd > 0 && std::isfinite(m.sd) ? m.sd : 1.0;
  }
  if (n == 0) return st;

  // Standardised design with an intercept column; missing entries start at the median.
  Eigen::MatrixXd A(n, p + 1);
  A.col(0).setOnes();
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index r = 0; r < n; ++r) {
      const double v = std::isnan(X(r, j)) ? st.median(j) : X(r, j);
      A(r, j + 1) = (v - st.center(j)) / st.scale(j);
    }
  Eigen::MatrixXd G = A.transpose() * A;

  std::vector<Eigen::Index> incomplete;
  for (Eigen::Index j = 0; j < p; ++j)
    if (!miss[static_cast<std::size_t>(j)].empty() && !obs[static_cast<std::size_t>(j)].empty())
      incomplete.push_back(j);

  st.rounds_used = 0;
  for (int round = 0; round < max_rounds && !incomplete.empty(); ++round) {
    ++st.rounds_used;
    double change = 0;
    for (Eigen::Index j : incomplete) {
      const auto& o = obs[static_cast<std::size_t>(j)];
      const auto& m = miss[static_cast<std::size_t>(j)];
      const Eigen::VectorXd beta = regress(A, G, j + 1, o, m);
      for (Eigen::Index r : m) {
        const double pred = std::clamp(A.row(r).dot(beta), (st.lo(j) - st.center(j)) / st.scale(j),
                                       (st.hi(j) - st.center(j)) / st.scale(j));
        change = std::max(change, std::abs(pred - A(r, j + 1)));
        A(r, j + 1) = pred;
      }
      const Eigen::VectorXd col = A.transpose() * A.col(j + 1);
      G.col(j + 1) = col;
      G.row(j + 1) = col.transpose();
    }
    if (change < tol) break;
  }

  for (Eigen::Index j = 0; j < p; ++j) {
    const auto& o = obs[static_cast<std::size_t>(j)];
    if (o.empty()) continue;
    st.coef.row(j) = regress(A, G, j + 1, o, miss[static_cast<std::size_t>(j)]).transpose();
  }
  return st;
}

void impute_vector(const ImputerState& st, FeatureVector& x) {
  for (std::size_t c = 0; c < x.categorical.size(); ++c)
    if (x.categorical[c] == kMissingCode) x.categorical[c] = st.categorical_fill[c];

  const Eigen::Index p = x.numerical.size();
  std::vector<Eigen::Index> missing;
  for (Eigen::Index j = 0; j < p; ++j)
    if (!std::isfinite(x.numerical(j))) missing.push_back(j);
  if (missing.empty()) return;

  Eigen::VectorXd a(p + 1);
  a(0) = 1.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double v = std::isfinite(x.numerical(j)) ? x.numerical(j) : st.median(j);
    a(j + 1) = (v - st.center(j)) / st.scale(j);
  }
  for (int round = 0; round < st.max_rounds; ++round) {
    double change = 0;
    for (Eigen::Index j : missing) {
      const double pred = std::clamp(st.coef.row(j).dot(a), (st.lo(j) - st.center(j)) / st.scale(j),
                                     (st.hi(j) - st.center(j)) / st.scale(j));
      change = std::max(change, std::abs(pred - a(j + 1)));
      a(j + 1) = pred;
    }
    if (change < st.tol) break;
  }
  for (Eigen::Index j : missing)
    x.numerical(j) = std::clamp(st.center(j) + st.scale(j) * a(j + 1), st.lo(j), st.hi(j));
}

LabeledDataset apply_imputer(const ImputerState& state, const LabeledDataset& ds) {
  LabeledDataset out = ds;
  for (auto& x : out.rows) impute_vector(state, x);
  return out;
}

// ----------------------------------------------------------------- scaler

ScalerState fit_scaler(const LabeledDataset& train) {
  const auto p = static_cast<Eigen::Index>(train.schema.n_numerical());
  ScalerState st;
  st.median = Eigen::VectorXd::Zero(p);
  st.q1 = Eigen::VectorXd::Zero(p);
  st.q3 = Eigen::VectorXd::Zero(p);
  std::vector<double> col;
  for (Eigen::Index j = 0; j < p; ++j) {
    col.clear();
    for (const auto& x : train.rows)
      if (std::isfinite(x.numerical(j))) col.push_back(x.numerical(j));
    if (col.empty()) continue;
    std::sort(col.begin(), col.end());
    st.median(j) = quantile_sorted(col, 0.5);
    st.q1(j) = quantile_sorted(col, 0.25);
    st.q3(j) = quantile_sorted(col, 0.75);
  }
  return st;
}

void scale_vector(const ScalerState& st, FeatureVector& x) {
  for (Eigen::Index j = 0; j < x.numerical.size(); ++j) {
    const double centered = x.numerical(j) - st.median(j);
    x.numerical(j) = st.degenerate(j) ? centered : centered / (st.q3(j) - st.q1(j));
  }
}

LabeledDataset apply_scaler(const ScalerState& state, const LabeledDataset& ds) {
  LabeledDataset out = ds;
  for (auto& x : out.rows) scale_vector(state, x);
  return out;
}

// --------------------------------------------------------------- pipeline

namespace {

FeatureSchema output_schema_for(const FeatureSchema& input, const std::vector<std::string>& kept) {
  std::vector<FeatureDescriptor> out = input.keep(kept).features();
  // Imputed and scaled numerical values are real-valued and unbounded.
  for (auto& f : out) {
    f.range.reset();
    if (!f.is_categorical()) f.integral = false;
  }
  return FeatureSchema(std::move(out), input.version());
}

std::vector<std::size_t> input_positions(const FeatureSchema& input, const std::vector<std::string>& kept) {
  std::vector<std::size_t> out;
  for (const auto& name : kept) out.push_back(input.index_of(name));
  return out;
}

}  // namespace

PipelineModel fit_pipeline(const LabeledDataset& train, const PipelineOptions& options) {
  train.check_shape();
  for (std::size_t r = 0; r < train.size(); ++r)
    if (is_attack(train.labels[r]))
      throw GuidelineViolation(Guideline::GT4, "training data for the pipeline contains an attack row (" +
                                                   std::string(class_name(train.labels[r])) + ")");
  if (train.empty()) throw PipelineError("cannot fit a pipeline on an empty training split");

  PipelineModel model;
  model.scaling_enabled = options.scaling;
  model.input_schema = infer_domains(train.schema, train);

  LabeledDataset ds = train;
  ds.schema = model.input_schema;
  if (options.field_mapping) {
    for (const auto& name : *options.field_mapping) model.input_schema.index_of(name);
    std::vector<std::string> keep;
    for (const auto& f : ds.schema.features()) {
      if (std::find(options.field_mapping->begin(), options.field_mapping->end(), f.name) !=
          options.field_mapping->end())
        keep.push_back(f.name);
      else
        model.drop_report.push_back({f.name, "mapping", "not listed in the field mapping"});
    }
    ds = select_columns(ds, keep);
  }
  ds = drop_environment_features(ds, &model.drop_report, options.environment_patterns);
  std::size_t removed = 0;
  ds = filter_control_plane(ds, &model.drop_report, &removed);
  if (removed) warn("pipeline: " + std::to_string(removed) + " TCP/ICMP training row(s) removed");
  ds = drop_uninformative(ds, &model.drop_report);
  if (ds.schema.empty()) throw PipelineError("no feature survives the preprocessing guidelines");
  if (ds.empty()) throw PipelineError("no training row survives the control-plane filter");

  model.kept_features = ds.schema.names();
  model.input_index = input_positions(model.input_schema, model.kept_features);
  model.output_schema = output_schema_for(model.input_schema, model.kept_features);
  ds.schema = model.output_schema;

  model.imputer = fit_imputer(ds, options.imputer_max_rounds, options.imputer_tol);
  const LabeledDataset imputed = apply_imputer(model.imputer, ds);
  model.scaler = fit_scaler(imputed);
  return model;
}

namespace {

// Kept features of a raw vector laid out in `schema`, in output order.
FeatureVector project(const PipelineModel& model, const FeatureSchema& schema,
                      const std::vector<std::size_t>& src, const FeatureVector& x) {
  const auto& out = model.output_schema;
  FeatureVector y;
  y.categorical.resize(out.n_categorical());
  y.numerical.resize(static_cast<Eigen::Index>(out.n_numerical()));
  for (std::size_t k = 0; k < out.size(); ++k) {
    const std::size_t i = src[k];
    if (out[k].is_categorical())
      y.categorical[out.slot(k)] = x.categorical[schema.slot(i)];
    else
      y.numerical(static_cast<Eigen::Index>(out.slot(k))) = x.numerical(static_cast<Eigen::Index>(schema.slot(i)));
  }
  return y;
}

void finish(const PipelineModel& model, FeatureVector& y) {
  impute_vector(model.imputer, y);
  if (model.scaling_enabled) scale_vector(model.scaler, y);
}

}  // namespace

LabeledDataset transform(const PipelineModel& model, const LabeledDataset& ds) {
  ds.check_shape();
  std::vector<std::size_t> src;
  src.reserve(model.kept_features.size());
  for (std::size_t k = 0; k < model.kept_features.size(); ++k) {
    const std::size_t i = ds.schema.index_of(model.kept_features[k]);
    if (ds.schema[i].kind != model.output_schema[k].kind)
      throw SchemaError("feature '" + model.kept_features[k] + "' has a different kind than at fit time");
    src.push_back(i);
  }
  LabeledDataset out;
  out.schema = model.output_schema;
  out.rows.reserve(ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    if (is_side_traffic(ds.schema, ds.rows[r])) continue;
    FeatureVector y = project(model, ds.schema, src, ds.rows[r]);
    finish(model, y);
    out.add(std::move(y), ds.labels[r], ds.row_ids[r]);
  }
  return out;
}

Eigen::VectorXd transform_dense(const PipelineModel& model, const FeatureVector& raw) {
  if (raw.categorical.size() != model.input_schema.n_categorical() ||
      static_cast<std::size_t>(raw.numerical.size()) != model.input_schema.n_numerical())
    throw SchemaError("vector does not match the pipeline's input schema");
  FeatureVector y = project(model, model.input_schema, model.input_index, raw);
  finish(model, y);
  return to_dense(model.output_schema, y);
}

// ------------------------------------------------------------ persistence

namespace {

nlohmann::json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json pipeline_to_json(const PipelineModel& m) {
  nlohmann::json drops = nlohmann::json::array();
  for (const auto& d : m.drop_report) drops.push_back({{"feature", d.feature}, {"reason", d.reason}, {"detail", d.detail}});
  nlohmann::json coef = nlohmann::json::array();
  for (Eigen::Index j = 0; j < m.imputer.coef.rows(); ++j) coef.push_back(vec(Eigen::VectorXd(m.imputer.coef.row(j).transpose())));
  return {
      {"format", "pfad-pipeline"},
      {"version", 1},
      {"scaling_enabled", m.scaling_enabled},
      {"input_schema", schema_to_json(m.input_schema)},
      {"kept_features", m.kept_features},
      {"drop_report", drops},
      {"imputer",
       {{"categorical_fill", m.imputer.categorical_fill},
        {"median", vec(m.imputer.median)},
        {"center", vec(m.imputer.center)},
        {"scale", vec(m.imputer.scale)},
        {"lo", vec(m.imputer.lo)},
        {"hi", vec(m.imputer.hi)},
        {"coefficients", coef},
        {"max_rounds", m.imputer.max_rounds},
        {"tol", m.imputer.tol},
        {"rounds_used", m.imputer.rounds_used}}},
      {"scaler", {{"median", vec(m.scaler.median)}, {"q1", vec(m.scaler.q1)}, {"q3", vec(m.scaler.q3)}}},
  };
}

PipelineModel pipeline_from_json(const nlohmann::json& j) {
  try {
    PipelineModel m;
    m.scaling_enabled = j.at("scaling_enabled").get<bool>();
    m.input_schema = schema_from_json(j.at("input_schema"));
    m.kept_features = j.at("kept_features").get<std::vector<std::string>>();
    m.input_index = input_positions(m.input_schema, m.kept_features);
    m.output_schema = output_schema_for(m.input_schema, m.kept_features);
    for (const auto& d : j.at("drop_report"))
      m.drop_report.push_back({d.at("feature"), d.at("reason"), d.at("detail")});
    const auto& im = j.at("imputer");
    m.imputer.categorical_fill = im.at("categorical_fill").get<std::vector<int>>();
    m.imputer.median = vec(im.at("median"));
    m.imputer.center = vec(im.at("center"));
    m.imputer.scale = vec(im.at("scale"));
    m.imputer.lo = vec(im.at("lo"));
    m.imputer.hi = vec(im.at("hi"));
    const auto& coef = im.at("coefficients");
    const auto p = m.imputer.median.size();
    m.imputer.coef.resize(p, p + 1);
    for (Eigen::Index r = 0; r < p; ++r) m.imputer.coef.row(r) = vec(coef.at(static_cast<std::size_t>(r))).transpose();
    m.imputer.max_rounds = im.at("max_rounds");
    m.imputer.tol = im.at("tol");
    m.imputer.rounds_used = im.value("rounds_used", 0);
    const auto& sc = j.at("scaler");
    m.scaler.median = vec(sc.at("median"));
    m.scaler.q1 = vec(sc.at("q1"));
    m.scaler.q3 = vec(sc.at("q3"));
    if (m.imputer.categorical_fill.size() != m.output_schema.n_categorical() ||
        static_cast<std::size_t>(p) != m.output_schema.n_numerical() ||
        m.scaler.median.size() != p || m.imputer.lo.size() != p || m.imputer.hi.size() != p)
      throw PipelineError("pipeline state does not match its kept features");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw PipelineError(std::string("malformed pipeline document: ") + e.what());
  }
}

void save_pipeline(const PipelineModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << pipeline_to_json(model).dump(1) << '\n';
}

PipelineModel load_pipeline(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw PipelineError(path + " is not valid JSON: " + e.what());
  }
  return pipeline_from_json(j);
}

}  // namespace pfad
