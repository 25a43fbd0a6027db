#pragma once

#include <functional>
#include <string>

#include "pfad/detectors.hpp"
#include "pfad/ensemble.hpp"
#include "pfad/preprocess.hpp"
#include "pfad/traffic_model.hpp"

namespace pfad {

// Everything an attacker may observe: the score of a raw feature vector and
// the decision threshold. Attack code only ever sees this interface.
class ScoreOracle {
 public:
  virtual ~ScoreOracle() = default;
  virtual double score(const FeatureVector& raw) const = 0;
  virtual double threshold() const = 0;
};

// Frozen preprocessing followed by a single detector.
class DetectorOracle final : public ScoreOracle {
 public:
  DetectorOracle(const PipelineModel& pipeline, const DetectorModel& model) : pipeline_(pipeline), model_(model) {}
  double score(const FeatureVector& raw) const override { return model_.score(transform_dense(pipeline_, raw)); }
  double threshold() const override { return model_.threshold; }

 private:
  const PipelineModel& pipeline_;
  const DetectorModel& model_;
};

class EnsembleOracle final : public ScoreOracle {
 public:
  EnsembleOracle(const PipelineModel& pipeline, const EnsembleModel& model) : pipeline_(pipeline), model_(model) {}
  double score(const FeatureVector& raw) const override { return model_.score(transform_dense(pipeline_, raw)); }
  double threshold() const override { return model_.threshold; }

 private:
  const PipelineModel& pipeline_;
  const EnsembleModel& model_;
};

class FunctionOracle final : public ScoreOracle {
 public:
  FunctionOracle(std::function<double(const FeatureVector&)> f, double tau) : f_(std::move(f)), tau_(tau) {}
  double score(const FeatureVector& raw) const override { return f_(raw); }
  double threshold() const override { return tau_; }

 private:
  std::function<double(const FeatureVector&)> f_;
  double tau_;
};

}  // namespace pfad
