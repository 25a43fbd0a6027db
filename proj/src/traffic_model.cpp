#include "pfad/traffic_model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "pfad/errors.hpp"

namespace pfad {

std::string_view class_name(ClassLabel c) {
  switch (c) {
    case ClassLabel::Normal: return "Normal";
    case ClassLabel::RestorationTEID: return "RestorationTEID";
    case ClassLabel::Flood: return "Flood";
    case ClassLabel::Deletion: return "Deletion";
    case ClassLabel::Modification: return "Modification";
    case ClassLabel::PDN0Fault: return "PDN0Fault";
  }
  return "?";
}

std::optional<ClassLabel> parse_class(std::string_view s) {
  std::string key;
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c)))
      key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  for (std::string_view prefix : {"pfcp", "upf"})
    if (key.starts_with(prefix) && key.size() > prefix.size()) key.erase(0, prefix.size());
  if (key == "normal" || key == "benign") return ClassLabel::Normal;
  if (key == "restorationteid") return ClassLabel::RestorationTEID;
  if (key == "flood") return ClassLabel::Flood;
  if (key == "deletion") return ClassLabel::Deletion;
  if (key == "modification") return ClassLabel::Modification;
  if (key == "pdn0fault" || key == "pdn0") return ClassLabel::PDN0Fault;
  return std::nullopt;
}

std::string_view kind_name(FeatureKind k) {
  return k == FeatureKind::categorical ? "categorical" : "numerical";
}

std::string_view protocol_name(Protocol p) {
  switch (p) {
    case Protocol::ip: return "ip";
    case Protocol::udp: return "udp";
    case Protocol::tcp: return "tcp";
    case Protocol::icmp: return "icmp";
    case Protocol::pfcp: return "pfcp";
    case Protocol::meta: return "meta";
  }
  return "?";
}

std::optional<Protocol> parse_protocol(std::string_view s) {
  for (Protocol p : {Protocol::ip, Protocol::udp, Protocol::tcp, Protocol::icmp, Protocol::pfcp,
                     Protocol::meta})
    if (protocol_name(p) == s) return p;
  return std::nullopt;
}

namespace {

std::optional<double> try_number(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data() + 2, s.data() + s.size(), v, 16);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return static_cast<double>(v);
  }
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

bool label_less(const std::string& a, const std::string& b) {
  const auto na = try_number(a);
  const auto nb = try_number(b);
  if (na && nb && *na != *nb) return *na < *nb;
  if (na && !nb) return true;
  if (!na && nb) return false;
  return a < b;
}

bool glob_match(std::string_view pattern, std::string_view text) {
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

const std::vector<std::string>& default_environment_patterns() {
  static const std::vector<std::string> patterns = {
      "ip.src",     "ip.dst",          "ip.src_host", "ip.dst_host", "ip.addr",
      "ip.host",    "ipv6.src",        "ipv6.dst",    "ipv6.addr",   "eth.*",
      "*.srcport",  "*.dstport",       "*.port",      "*.stream",    "frame.number",
      "frame.time", "frame.time_*",    "*time_stamp*", "*timestamp*", "*ipv4*",
      "*ipv6*",     "*.node_id_fqdn",
  };
  return patterns;
}

bool matches_any(const std::vector<std::string>& patterns, std::string_view name) {
  return std::any_of(patterns.begin(), patterns.end(),
                     [&](const std::string& p) { return glob_match(p, name); });
}

FeatureSchema::FeatureSchema(std::vector<FeatureDescriptor> features, int version)
    : features_(std::move(features)), version_(version) {
  slots_.resize(features_.size());
  std::size_t n_num = 0;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    auto& f = features_[i];
    if (f.name.empty()) throw SchemaError("feature with empty name at position " + std::to_string(i));
    if (!by_name_.emplace(f.name, i).second) throw SchemaError("duplicate feature name '" + f.name + "'");
    if (matches_any(default_environment_patterns(), f.name)) f.environment_dependent = true;
    if (f.is_categorical()) {
      std::sort(f.labels.begin(), f.labels.end(), label_less);
      if (std::adjacent_find(f.labels.begin(), f.labels.end()) != f.labels.end())
        throw SchemaError("duplicate category label in '" + f.name + "'");
      f.range.reset();
      slots_[i] = n_categorical_++;
    } else {
      if (f.range && !(f.range->lo <= f.range->hi))
        throw SchemaError("numerical domain of '" + f.name + "' has lo > hi");
      f.labels.clear();
      slots_[i] = n_num++;
    }
  }
}

std::optional<std::size_t> FeatureSchema::find(std::string_view name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::size_t FeatureSchema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw SchemaError("feature '" + std::string(name) + "' is not in the schema");
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(features_.size());
  for (const auto& f : features_) out.push_back(f.name);
  return out;
}

FeatureSchema FeatureSchema::keep(const std::vector<std::string>& names) const {
  std::set<std::string, std::less<>> wanted(names.begin(), names.end());
  std::vector<FeatureDescriptor> out;
  for (const auto& f : features_)
    if (wanted.erase(f.name)) out.push_back(f);
  if (!wanted.empty()) throw SchemaError("feature '" + *wanted.begin() + "' is not in the schema");
  return FeatureSchema(std::move(out), version_);
}

bool identical(const FeatureVector& a, const FeatureVector& b) {
  if (a.categorical != b.categorical) return false;
  if (a.numerical.size() != b.numerical.size()) return false;
  for (Eigen::Index i = 0; i < a.numerical.size(); ++i) {
    const double x = a.numerical(i), y = b.numerical(i);
    if (std::isnan(x) && std::isnan(y)) continue;
    if (x != y) return false;
  }
  return true;
}

int encode_label(const FeatureDescriptor& d, std::string_view raw) {
  if (raw.empty()) return kMissingCode;
  auto it = std::lower_bound(d.labels.begin(), d.labels.end(), std::string(raw), label_less);
  if (it != d.labels.end() && *it == raw) return static_cast<int>(it - d.labels.begin());
  // Numeric-aware fallback so that "0x15" and "21" match the same label.
  if (const auto v = try_number(raw)) {
    for (std::size_t i = 0; i < d.labels.size(); ++i)
      if (const auto w = try_number(d.labels[i]); w && *w == *v) return static_cast<int>(i);
  }
  return kUnknownCode;
}

double parse_number(std::string_view raw, std::string_view feature) {
  if (raw.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (const auto v = try_number(raw)) return *v;
  throw DataError("cannot parse '" + std::string(raw) + "' as a number for feature '" +
                  std::string(feature) + "'");
}

FeatureVector encode_categorical(const FeatureSchema& schema, const RawRecord& raw) {
  FeatureVector x;
  x.categorical.resize(schema.n_categorical());
  x.numerical.resize(static_cast<Eigen::Index>(schema.n_numerical()));
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema[i];
    auto it = raw.find(f.name);
    if (it == raw.end()) throw SchemaError("raw record has no value for feature '" + f.name + "'");
    if (f.is_categorical())
      x.categorical[schema.slot(i)] = encode_label(f, it->second);
    else
      x.numerical(static_cast<Eigen::Index>(schema.slot(i))) = parse_number(it->second, f.name);
  }
  return x;
}

RawRecord decode(const FeatureSchema& schema, const FeatureVector& x) {
  RawRecord out;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema[i];
    if (f.is_categorical()) {
      const int code = x.categorical.at(schema.slot(i));
      if (code == kMissingCode)
        out[f.name] = "";
      else if (code >= 0 && static_cast<std::size_t>(code) < f.labels.size())
        out[f.name] = f.labels[static_cast<std::size_t>(code)];
      else
        out[f.name] = "<unknown>";
    } else {
      const double v = x.numerical(static_cast<Eigen::Index>(schema.slot(i)));
      out[f.name] = std::isnan(v) ? "" : format_number(v);
    }
  }
  return out;
}

double feature_value(const FeatureSchema& schema, const FeatureVector& x, std::size_t i) {
  const auto& f = schema[i];
  if (!f.is_categorical()) return x.numerical(static_cast<Eigen::Index>(schema.slot(i)));
  const int code = x.categorical[schema.slot(i)];
  if (code == kMissingCode) return std::numeric_limits<double>::quiet_NaN();
  if (code == kUnknownCode) return static_cast<double>(f.labels.size());
  return static_cast<double>(code);
}

Eigen::VectorXd to_dense(const FeatureSchema& schema, const FeatureVector& x) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(schema.size()));
  for (std::size_t i = 0; i < schema.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = feature_value(schema, x, i);
  return out;
}

std::string_view violation_name(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::length_mismatch: return "length-mismatch";
    case Violation::Kind::out_of_domain: return "out-of-domain";
    case Violation::Kind::missing: return "missing";
    case Violation::Kind::non_finite: return "non-finite";
    case Violation::Kind::interval_breach: return "interval-breach";
  }
  return "?";
}

std::vector<Violation> validate_vector(const FeatureSchema& schema, const FeatureVector& x) {
  std::vector<Violation> out;
  constexpr auto none = std::numeric_limits<std::size_t>::max();
  if (x.categorical.size() != schema.n_categorical())
    out.push_back({Violation::Kind::length_mismatch, none,
                   "expected " + std::to_string(schema.n_categorical()) + " categorical entries, got " +
                       std::to_string(x.categorical.size())});
  if (static_cast<std::size_t>(x.numerical.size()) != schema.n_numerical())
    out.push_back({Violation::Kind::length_mismatch, none,
                   "expected " + std::to_string(schema.n_numerical()) + " numerical entries, got " +
                       std::to_string(x.numerical.size())});
  if (!out.empty()) return out;

  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema[i];
    if (f.is_categorical()) {
      const int code = x.categorical[schema.slot(i)];
      if (code == kMissingCode)
        out.push_back({Violation::Kind::missing, i, f.name + ": missing"});
      else if (code != kUnknownCode &&
               (code < 0 || static_cast<std::size_t>(code) >= f.labels.size()))
        out.push_back({Violation::Kind::out_of_domain, i,
                       f.name + ": code " + std::to_string(code) + " outside domain of size " +
                           std::to_string(f.labels.size())});
    } else {
      const double v = x.numerical(static_cast<Eigen::Index>(schema.slot(i)));
      if (!std::isfinite(v)) {
        out.push_back({Violation::Kind::non_finite, i, f.name + ": non-finite value"});
      } else if (f.range && !f.range->contains(v)) {
        out.push_back({Violation::Kind::interval_breach, i,
                       f.name + ": " + format_number(v) + " outside [" + format_number(f.range->lo) +
                           ", " + format_number(f.range->hi) + "]"});
      } else if (f.integral && v != std::floor(v)) {
        out.push_back({Violation::Kind::out_of_domain, i, f.name + ": non-integral value"});
      }
    }
  }
  return out;
}

void LabeledDataset::add(FeatureVector row, ClassLabel label, std::uint64_t id) {
  rows.push_back(std::move(row));
  labels.push_back(label);
  row_ids.push_back(id);
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& indices) const {
  LabeledDataset out;
  out.schema = schema;
  out.rows.reserve(indices.size());
  for (std::size_t i : indices) out.add(rows.at(i), labels.at(i), row_ids.at(i));
  return out;
}

LabeledDataset LabeledDataset::filter(ClassLabel label) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < size(); ++i)
    if (labels[i] == label) idx.push_back(i);
  return subset(idx);
}

void LabeledDataset::check_shape() const {
  if (labels.size() != rows.size() || row_ids.size() != rows.size())
    throw DataError("dataset arrays disagree: " + std::to_string(rows.size()) + " rows, " +
                    std::to_string(labels.size()) + " labels, " + std::to_string(row_ids.size()) + " ids");
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (rows[r].categorical.size() != schema.n_categorical() ||
        static_cast<std::size_t>(rows[r].numerical.size()) != schema.n_numerical())
      throw DataError("row " + std::to_string(r) + " does not match the schema shape");
}

Eigen::MatrixXd design_matrix(const LabeledDataset& ds) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(ds.schema.size()));
  for (std::size_t r = 0; r < ds.size(); ++r)
    for (std::size_t i = 0; i < ds.schema.size(); ++i)
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = feature_value(ds.schema, ds.rows[r], i);
  return X;
}

nlohmann::json schema_to_json(const FeatureSchema& schema) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : schema.features()) {
    nlohmann::json j = {{"name", f.name},
                        {"kind", kind_name(f.kind)},
                        {"protocol", protocol_name(f.protocol)},
                        {"environment_dependent", f.environment_dependent}};
    if (f.is_categorical()) {
      j["domain"] = {{"labels", f.labels}};
    } else {
      j["integral"] = f.integral;
      if (f.range) j["domain"] = {{"lo", f.range->lo}, {"hi", f.range->hi}};
    }
    features.push_back(std::move(j));
  }
  return {{"version", schema.version()}, {"features", std::move(features)}};
}

FeatureSchema schema_from_json(const nlohmann::json& j) {
  try {
    std::vector<FeatureDescriptor> out;
    for (const auto& jf : j.at("features")) {
      FeatureDescriptor f;
      f.name = jf.at("name").get<std::string>();
      const auto kind = jf.at("kind").get<std::string>();
      if (kind == "categorical")
        f.kind = FeatureKind::categorical;
      else if (kind == "numerical")
        f.kind = FeatureKind::numerical;
      else
        throw SchemaError("feature '" + f.name + "' has unknown kind '" + kind + "'");
      const auto proto = parse_protocol(jf.value("protocol", std::string("meta")));
      if (!proto) throw SchemaError("feature '" + f.name + "' has unknown protocol");
      f.protocol = *proto;
      f.environment_dependent = jf.value("environment_dependent", false);
      f.integral = jf.value("integral", false);
      if (jf.contains("domain")) {
        const auto& d = jf["domain"];
        if (f.is_categorical())
          f.labels = d.at("labels").get<std::vector<std::string>>();
        else
          f.range = Interval{d.at("lo").get<double>(), d.at("hi").get<double>()};
      }
      out.push_back(std::move(f));
    }
    return FeatureSchema(std::move(out), j.value("version", 1));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed schema document: ") + e.what());
  }
}

void save_schema(const FeatureSchema& schema, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write schema to " + path);
  out << schema_to_json(schema).dump(2) << '\n';
}

FeatureSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read schema " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema " + path + " is not valid JSON: " + e.what());
  }
  return schema_from_json(j);
}

}  // namespace pfad
