#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace pfad {

enum class FeatureKind { categorical, numerical };

// Layer a field belongs to. tcp/icmp exist only so that input schemas can
// describe those columns before the control-plane filter removes them.
enum class Protocol { ip, udp, tcp, icmp, pfcp, meta };

enum class ClassLabel : int { Normal = 0, RestorationTEID, Flood, Deletion, Modification, PDN0Fault };

inline constexpr std::array<ClassLabel, 6> kAllClasses = {
    ClassLabel::Normal,   ClassLabel::RestorationTEID, ClassLabel::Flood,
    ClassLabel::Deletion, ClassLabel::Modification,    ClassLabel::PDN0Fault};

inline constexpr std::array<ClassLabel, 5> kAttackClasses = {
    ClassLabel::RestorationTEID, ClassLabel::Flood, ClassLabel::Deletion,
    ClassLabel::Modification, ClassLabel::PDN0Fault};

inline bool is_attack(ClassLabel c) { return c != ClassLabel::Normal; }

std::string_view class_name(ClassLabel c);
// Case-insensitive; ignores punctuation and "pfcp"/"upf" prefixes, so both
// "Deletion" and "PFCP Deletion" parse. "benign" is accepted for Normal.
std::optional<ClassLabel> parse_class(std::string_view s);

std::string_view kind_name(FeatureKind k);
std::string_view protocol_name(Protocol p);
std::optional<Protocol> parse_protocol(std::string_view s);

// Reserved categorical codes, both outside [0, |domain|).
inline constexpr int kMissingCode = -1;
inline constexpr int kUnknownCode = -2;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  bool operator==(const Interval&) const = default;
};

struct FeatureDescriptor {
  std::string name;
  FeatureKind kind = FeatureKind::numerical;
  Protocol protocol = Protocol::meta;
  bool environment_dependent = false;
  // Numerical field that only takes whole values on the wire (counters, ids).
  bool integral = false;
  // Categorical domain; kept sorted (numeric-aware) by FeatureSchema.
  std::vector<std::string> labels;
  // Numerical domain.
  std::optional<Interval> range;

  bool is_categorical() const { return kind == FeatureKind::categorical; }
  bool has_domain() const { return is_categorical() ? !labels.empty() : range.has_value(); }
  bool operator==(const FeatureDescriptor&) const = default;
};

// Numeric-aware label ordering: labels that both parse as numbers (decimal or
// 0x-hex) compare by value, everything else lexicographically.
bool label_less(const std::string& a, const std::string& b);

// Shell-style glob with '*' and '?'.
bool glob_match(std::string_view pattern, std::string_view text);

// Name patterns for environment-dependent fields: addresses, ports,
// deployment identifiers and absolute timestamps.
const std::vector<std::string>& default_environment_patterns();
bool matches_any(const std::vector<std::string>& patterns, std::string_view name);

class FeatureSchema {
 public:
  FeatureSchema() = default;
  // Throws SchemaError on duplicate names or malformed domains. Sorts
  // categorical labels and flags blocklisted names as environment dependent.
  explicit FeatureSchema(std::vector<FeatureDescriptor> features, int version = 1);

  std::size_t size() const { return features_.size(); }
  bool empty() const { return features_.empty(); }
  const FeatureDescriptor& operator[](std::size_t i) const { return features_[i]; }
  const std::vector<FeatureDescriptor>& features() const { return features_; }
  int version() const { return version_; }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws SchemaError

  // Position of feature i inside FeatureVector::categorical or ::numerical.
  std::size_t slot(std::size_t i) const { return slots_[i]; }
  std::size_t n_categorical() const { return n_categorical_; }
  std::size_t n_numerical() const { return features_.size() - n_categorical_; }

  std::vector<std::string> names() const;

  // Subset in this schema's order.
  FeatureSchema keep(const std::vector<std::string>& names) const;

  bool operator==(const FeatureSchema& o) const {
    return version_ == o.version_ && features_ == o.features_;
  }

 private:
  std::vector<FeatureDescriptor> features_;
  int version_ = 1;
  std::vector<std::size_t> slots_;
  std::size_t n_categorical_ = 0;
  std::map<std::string, std::size_t, std::less<>> by_name_;
};

// x = [x_cat, x_num]: categorical codes and reals, each in schema order of its kind.
struct FeatureVector {
  std::vector<int> categorical;
  Eigen::VectorXd numerical;
};

// Bitwise comparison that treats NaN as equal to NaN.
bool identical(const FeatureVector& a, const FeatureVector& b);

using RawRecord = std::map<std::string, std::string, std::less<>>;

// Raw string value -> code/real for one feature. "" is the missing marker.
int encode_label(const FeatureDescriptor& d, std::string_view raw);
double parse_number(std::string_view raw, std::string_view feature);

FeatureVector encode_categorical(const FeatureSchema& schema, const RawRecord& raw);
RawRecord decode(const FeatureSchema& schema, const FeatureVector& x);

// Value of feature i as a real: categorical code, UNKNOWN as |domain|, MISSING as NaN.
double feature_value(const FeatureSchema& schema, const FeatureVector& x, std::size_t i);
Eigen::VectorXd to_dense(const FeatureSchema& schema, const FeatureVector& x);

struct Violation {
  enum class Kind { length_mismatch, out_of_domain, missing, non_finite, interval_breach };
  Kind kind;
  std::size_t feature;  // schema index; SIZE_MAX for length mismatches
  std::string message;
};

std::string_view violation_name(Violation::Kind k);

// Every invariant breach of x against schema; empty means conforming.
// UNKNOWN is a legitimate encoded value, MISSING is not.
std::vector<Violation> validate_vector(const FeatureSchema& schema, const FeatureVector& x);

struct LabeledDataset {
  FeatureSchema schema;
  std::vector<FeatureVector> rows;
  std::vector<ClassLabel> labels;
  // Row identity (hash of the source line) used for split disjointness.
  std::vector<std::uint64_t> row_ids;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  void add(FeatureVector row, ClassLabel label, std::uint64_t id);
  LabeledDataset subset(const std::vector<std::size_t>& indices) const;
  LabeledDataset filter(ClassLabel label) const;
  // Throws DataError when the parallel arrays disagree or a row's shape does not fit the schema.
  void check_shape() const;
};

// n x d matrix of feature_value() in schema order.
Eigen::MatrixXd design_matrix(const LabeledDataset& ds);

nlohmann::json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& j);
void save_schema(const FeatureSchema& schema, const std::string& path);
FeatureSchema load_schema(const std::string& path);

}  // namespace pfad
