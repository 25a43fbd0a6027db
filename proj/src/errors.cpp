#include "pfad/errors.hpp"

namespace pfad {

std::string_view family_name(ErrorFamily f) {
  switch (f) {
    case ErrorFamily::Config: return "ConfigError";
    case ErrorFamily::Io: return "IoError";
    case ErrorFamily::Schema: return "SchemaError";
    case ErrorFamily::Data: return "DataError";
    case ErrorFamily::Guideline: return "GuidelineViolation";
    case ErrorFamily::Fit: return "FitError";
    case ErrorFamily::GridSearch: return "GridSearchError";
    case ErrorFamily::Pipeline: return "PipelineError";
    case ErrorFamily::Marginals: return "MarginalsError";
    case ErrorFamily::Budget: return "BudgetExhausted";
    case ErrorFamily::Metric: return "MetricError";
    case ErrorFamily::Constraint: return "ConstraintViolation";
  }
  return "Error";
}

int exit_code(ErrorFamily f) {
  switch (f) {
    case ErrorFamily::Config: return 2;
    case ErrorFamily::Io: return 3;
    case ErrorFamily::Schema: return 4;
    case ErrorFamily::Data: return 5;
    case ErrorFamily::Guideline: return 6;
    case ErrorFamily::Fit: return 7;
    case ErrorFamily::GridSearch: return 8;
    case ErrorFamily::Pipeline: return 9;
    case ErrorFamily::Marginals: return 10;
    case ErrorFamily::Budget: return 11;
    case ErrorFamily::Metric: return 12;
    case ErrorFamily::Constraint: return 13;
  }
  return 1;
}

std::string_view guideline_name(Guideline g) {
  switch (g) {
    case Guideline::GT1: return "GT1";
    case Guideline::GT2: return "GT2";
    case Guideline::GT3: return "GT3";
    case Guideline::GT4: return "GT4";
    case Guideline::GE1: return "GE1";
    case Guideline::GE2: return "GE2";
    case Guideline::GE3: return "GE3";
  }
  return "G?";
}

}  // namespace pfad
