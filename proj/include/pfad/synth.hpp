#pragma once

#include <cstdint>
#include <map>

#include "pfad/corpus.hpp"
#include "pfad/traffic_model.hpp"

namespace pfad {

// Built-in schema for tshark PFCP exports: IP/UDP/PFCP header fields, the
// PFCP information elements named in the attack descriptions, plus TCP/ICMP
// and frame columns that the preprocessing guidelines remove.
FeatureSchema pfcp_schema();

struct SynthConfig {
  std::size_t n_benign = 0;
  std::map<ClassLabel, std::size_t> attack_counts;
  std::uint64_t seed = 42;
  double noise_scale = 1.0;     // multiplies the spread of numeric base distributions
  double missing_rate = 0.01;   // extra per-field dropout on benign numeric fields
  double tcp_fraction = 0.0;    // share of benign rows replaced by TCP/ICMP side traffic
  std::uint64_t frame_offset = 0;
};

// TEIDs the UPF hands out: 1024 * 4 * 16.
inline constexpr double kTeidPoolSize = 65536;

LabeledDataset synth_benign(const SynthConfig& cfg, const FeatureSchema& schema);
// Throws ConfigError for kind == Normal.
LabeledDataset synth_attack(ClassLabel kind, std::size_t n, std::uint64_t seed, const FeatureSchema& schema,
                            double noise_scale = 1.0, std::uint64_t frame_offset = 0);
// Benign rows followed by the configured attack rows.
LabeledDataset synth_dataset(const SynthConfig& cfg, const FeatureSchema& schema);

struct SplitCounts {
  std::map<ClassLabel, std::size_t> train, validation, test;
};

// Sample distribution of the reference 5G attack corpus.
SplitCounts reference_counts();
// Counts multiplied by `scale`; every non-zero attack count stays >= 1.
SplitCounts scaled_counts(const SplitCounts& base, double scale);

struct SynthBenchmark {
  SplitCounts counts = reference_counts();
  std::uint64_t seed = 42;
  double noise_scale = 1.0;
  double missing_rate = 0.01;
  double tcp_fraction = 0.0;
};

// Three independently seeded splits passed through the usual split checks.
Splits synth_splits(const SynthBenchmark& bench, const FeatureSchema& schema);

}  // namespace pfad
