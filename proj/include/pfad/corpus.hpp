#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pfad/traffic_model.hpp"

namespace pfad {

enum class LabelFilter { all, normal, attacks, listed };

std::string_view label_filter_name(LabelFilter f);
std::optional<LabelFilter> parse_label_filter(std::string_view s);

struct SourceSpec {
  std::string path;
  LabelFilter filter = LabelFilter::all;
  std::vector<ClassLabel> labels;  // used when filter == listed
  // Row window on the file, applied before label filtering.
  std::size_t first = 0;
  std::optional<std::size_t> count;

  bool admits(ClassLabel c) const;
  bool admits_attacks() const;
};

struct SplitSpec {
  std::vector<SourceSpec> train;
  std::vector<SourceSpec> validation;
  std::vector<SourceSpec> test;
  std::string label_column = "Label";
};

struct Splits {
  LabeledDataset train;
  LabeledDataset validation;
  LabeledDataset test;
};

// An already-loaded source. Only the filter/window fields of `source` are used.
struct SplitInput {
  LabeledDataset data;
  SourceSpec source;
};

std::uint64_t row_identity(std::string_view raw_line);

// Rows get Normal when the label column is absent or empty. Schema features
// missing from the header are read as missing values (with a warning).
LabeledDataset load_csv(const std::string& path, const FeatureSchema& schema,
                        const std::optional<std::string>& label_column = std::string("Label"));

Splits build_splits(const SplitSpec& spec, const FeatureSchema& schema);
Splits assemble_splits(const std::vector<SplitInput>& train, const std::vector<SplitInput>& validation,
                       const std::vector<SplitInput>& test);

// Always contains all six classes.
std::map<ClassLabel, std::size_t> class_distribution(const LabeledDataset& ds);

// Dataset -> CSV in the input format (decoded values plus a label column) and
// a sidecar manifest at <path>.json.
void write_dataset(const LabeledDataset& ds, const std::string& path, const nlohmann::json& extra = {},
                   const std::string& label_column = "Label");
nlohmann::json dataset_manifest(const LabeledDataset& ds);

// CSV text of one row in schema order followed by its label.
std::string row_line(const FeatureSchema& schema, const FeatureVector& x, ClassLabel label);

}  // namespace pfad
