#include "pfad/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

#include "pfad/csv.hpp"
#include "pfad/errors.hpp"
#include "pfad/log.hpp"
#include "pfad/rng.hpp"

namespace pfad {

std::string_view label_filter_name(LabelFilter f) {
  switch (f) {
    case LabelFilter::all: return "all";
    case LabelFilter::normal: return "normal";
    case LabelFilter::attacks: return "attacks";
    case LabelFilter::listed: return "listed";
  }
  return "?";
}

std::optional<LabelFilter> parse_label_filter(std::string_view s) {
  for (LabelFilter f : {LabelFilter::all, LabelFilter::normal, LabelFilter::attacks, LabelFilter::listed})
    if (label_filter_name(f) == s) return f;
  return std::nullopt;
}

bool SourceSpec::admits(ClassLabel c) const {
  switch (filter) {
    case LabelFilter::all: return true;
    case LabelFilter::normal: return c == ClassLabel::Normal;
    case LabelFilter::attacks: return is_attack(c);
    case LabelFilter::listed: return std::find(labels.begin(), labels.end(), c) != labels.end();
  }
  return false;
}

bool SourceSpec::admits_attacks() const {
  switch (filter) {
    case LabelFilter::all:
    case LabelFilter::attacks: return true;
    case LabelFilter::normal: return false;
    case LabelFilter::listed: return std::any_of(labels.begin(), labels.end(), is_attack);
  }
  return true;
}

std::uint64_t row_identity(std::string_view raw_line) { return splitmix64(fnv1a(raw_line)); }

LabeledDataset load_csv(const std::string& path, const FeatureSchema& schema,
                        const std::optional<std::string>& label_column) {
  const RawTable table = read_csv(path);

  std::vector<std::optional<std::size_t>> column_feature(table.header.size());
  std::optional<std::size_t> label_idx;
  std::vector<std::string> ignored;
  std::vector<bool> seen(schema.size(), false);
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const std::string& name = table.header[c];
    if (label_column && name == *label_column) {
      label_idx = c;
    } else if (auto i = schema.find(name)) {
      column_feature[c] = *i;
      seen[*i] = true;
    } else {
      ignored.push_back(name);
    }
  }
  const auto matched = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true));
  if (matched == 0) throw SchemaError(path + ": header matches none of the " + std::to_string(schema.size()) + " schema features");
  if (!ignored.empty()) {
    std::string list;
    for (const auto& n : ignored) list += (list.empty() ? "" : ", ") + n;
    warn(path + ": ignoring " + std::to_string(ignored.size()) + " column(s) not in the schema: " + list);
  }
  if (matched < schema.size()) {
    std::string list;
    for (std::size_t i = 0; i < schema.size(); ++i)
      if (!seen[i]) list += (list.empty() ? "" : ", ") + schema[i].name;
    warn(path + ": schema features absent from the header are read as missing: " + list);
  }

  if (label_column && !label_idx)
    warn(path + ": no '" + *label_column + "' column; every row is read as Normal");

  LabeledDataset ds;
  ds.schema = schema;
  ds.rows.reserve(table.rows.size());
  RawRecord rec;
  for (const auto& f : schema.features()) rec[f.name] = "";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& fields = table.rows[r];
    for (std::size_t c = 0; c < fields.size(); ++c)
      if (column_feature[c]) rec[schema[*column_feature[c]].name] = fields[c];
    ClassLabel label = ClassLabel::Normal;
    if (label_idx && !fields[*label_idx].empty()) {
      auto parsed = parse_class(fields[*label_idx]);
      if (!parsed)
        throw DataError(path + ": row " + std::to_string(r + 1) + " has unknown label '" + fields[*label_idx] + "'");
      label = *parsed;
    }
    ds.add(encode_categorical(schema, rec), label, row_identity(table.lines[r]));
  }
  return ds;
}

namespace {

void append_source(LabeledDataset& out, const SplitInput& in, bool is_train,
                   std::unordered_set<std::uint64_t>& taken, std::size_t& overlap) {
  const auto& src = in.source;
  const std::size_t end = src.count ? std::min(in.data.size(), src.first + *src.count) : in.data.size();
  for (std::size_t r = src.first; r < end; ++r) {
    const ClassLabel label = in.data.labels[r];
    if (!src.admits(label)) continue;
    if (is_train && is_attack(label))
      throw GuidelineViolation(Guideline::GT4, std::string("attack row (") + std::string(class_name(label)) +
                                                   ") routed to the training split from source '" +
                                                   src.path + "', row " + std::to_string(r + 1));
    if (!taken.insert(in.data.row_ids[r]).second) {
      ++overlap;
      continue;
    }
    out.add(in.data.rows[r], label, in.data.row_ids[r]);
  }
}

LabeledDataset gather(const std::vector<SplitInput>& inputs, const char* split, bool is_train,
                      std::unordered_set<std::uint64_t>& taken) {
  LabeledDataset out;
  if (!inputs.empty()) out.schema = inputs.front().data.schema;
  std::size_t overlap = 0;
  for (const auto& in : inputs) {
    if (!(in.data.schema == out.schema)) throw SchemaError(std::string(split) + " sources disagree on the schema");
    if (is_train && (in.source.filter == LabelFilter::attacks ||
                     (in.source.filter == LabelFilter::listed && in.source.admits_attacks())))
      throw GuidelineViolation(Guideline::GT4, "training source '" + in.source.path +
                                                   "' has a label filter that admits attack classes");
    append_source(out, in, is_train, taken, overlap);
  }
  if (overlap)
    warn(std::to_string(overlap) + " row(s) dropped from the " + split +
         " split because they already appear in another split or earlier in this one");
  return out;
}

}  // namespace

Splits assemble_splits(const std::vector<SplitInput>& train, const std::vector<SplitInput>& validation,
                       const std::vector<SplitInput>& test) {
  std::unordered_set<std::uint64_t> taken;
  Splits s;
  s.train = gather(train, "train", true, taken);
  s.validation = gather(validation, "validation", false, taken);
  s.test = gather(test, "test", false, taken);
  const auto& schema = !train.empty() ? s.train.schema : !validation.empty() ? s.validation.schema : s.test.schema;
  s.train.schema = s.validation.schema = s.test.schema = schema;
  const auto val = class_distribution(s.validation);
  std::size_t val_attacks = 0;
  for (ClassLabel c : kAttackClasses) val_attacks += val.at(c);
  if (val_attacks == 0)
    warn("validation split contains no attack rows; grid search and ensemble fitting need labelled attacks");
  return s;
}

Splits build_splits(const SplitSpec& spec, const FeatureSchema& schema) {
  std::map<std::string, LabeledDataset> cache;
  auto load = [&](const std::vector<SourceSpec>& sources) {
    std::vector<SplitInput> out;
    for (const auto& src : sources) {
      auto it = cache.find(src.path);
      if (it == cache.end()) it = cache.emplace(src.path, load_csv(src.path, schema, spec.label_column)).first;
      out.push_back({it->second, src});
    }
    return out;
  };
  const auto train = load(spec.train);
  const auto validation = load(spec.validation);
  const auto test = load(spec.test);
  Splits s = assemble_splits(train, validation, test);
  s.train.schema = s.validation.schema = s.test.schema = schema;
  return s;
}

std::map<ClassLabel, std::size_t> class_distribution(const LabeledDataset& ds) {
  std::map<ClassLabel, std::size_t> out;
  for (ClassLabel c : kAllClasses) out[c] = 0;
  for (ClassLabel c : ds.labels) ++out[c];
  return out;
}

std::string row_line(const FeatureSchema& schema, const FeatureVector& x, ClassLabel label) {
  const RawRecord rec = decode(schema, x);
  std::vector<std::string> fields;
  fields.reserve(schema.size() + 1);
  for (const auto& f : schema.features()) fields.push_back(rec.at(f.name));
  fields.emplace_back(class_name(label));
  return join_csv(fields);
}

nlohmann::json dataset_manifest(const LabeledDataset& ds) {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [c, n] : class_distribution(ds)) counts[std::string(class_name(c))] = n;
  return {{"rows", ds.size()}, {"counts", counts}, {"schema_version", ds.schema.version()},
          {"features", ds.schema.size()}};
}

void write_dataset(const LabeledDataset& ds, const std::string& path, const nlohmann::json& extra,
                   const std::string& label_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  auto header = ds.schema.names();
  header.push_back(label_column);
  out << join_csv(header) << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) out << row_line(ds.schema, ds.rows[r], ds.labels[r]) << '\n';
  if (!out) throw IoError("write failure on " + path);

  nlohmann::json manifest = dataset_manifest(ds);
  if (extra.is_object())
    for (const auto& [k, v] : extra.items()) manifest[k] = v;
  std::ofstream side(path + ".json", std::ios::binary);
  if (!side) throw IoError("cannot write " + path + ".json");
  side << manifest.dump(2) << '\n';
}

}  // namespace pfad
