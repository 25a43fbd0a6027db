#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pfad {

// Error families; each maps to a distinct CLI exit code.
enum class ErrorFamily {
  Config,
  Io,
  Schema,
  Data,
  Guideline,
  Fit,
  GridSearch,
  Pipeline,
  Marginals,
  Budget,
  Metric,
  Constraint,
};

std::string_view family_name(ErrorFamily f);
int exit_code(ErrorFamily f);

class Error : public std::runtime_error {
 public:
  Error(ErrorFamily family, const std::string& what)
      : std::runtime_error(what), family_(family) {}

  ErrorFamily family() const { return family_; }
  // Machine-readable code, e.g. "SchemaError" or "GT4".
  virtual std::string code() const { return std::string(family_name(family_)); }

 private:
  ErrorFamily family_;
};

#define PFAD_DEFINE_ERROR(Name, Family)                                  \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(ErrorFamily::Family, what) {} \
  };

PFAD_DEFINE_ERROR(ConfigError, Config)
PFAD_DEFINE_ERROR(IoError, Io)
PFAD_DEFINE_ERROR(SchemaError, Schema)
PFAD_DEFINE_ERROR(DataError, Data)
PFAD_DEFINE_ERROR(FitError, Fit)
PFAD_DEFINE_ERROR(GridSearchError, GridSearch)
PFAD_DEFINE_ERROR(PipelineError, Pipeline)
PFAD_DEFINE_ERROR(MarginalsError, Marginals)
PFAD_DEFINE_ERROR(BudgetExhausted, Budget)
PFAD_DEFINE_ERROR(MetricError, Metric)
PFAD_DEFINE_ERROR(ConstraintViolation, Constraint)

#undef PFAD_DEFINE_ERROR

// Training/evaluation guideline identifiers.
enum class Guideline { GT1, GT2, GT3, GT4, GE1, GE2, GE3 };

std::string_view guideline_name(Guideline g);

class GuidelineViolation : public Error {
 public:
  GuidelineViolation(Guideline g, const std::string& what)
      : Error(ErrorFamily::Guideline, std::string(guideline_name(g)) + ": " + what),
        guideline_(g) {}

  Guideline guideline() const { return guideline_; }
  std::string code() const override { return std::string(guideline_name(guideline_)); }

 private:
  Guideline guideline_;
};

}  // namespace pfad
