#pragma once

#include <stdexcept>
#include <string>

namespace gbq {

/// Base of every library error. `kind()` is the stable machine-readable tag
/// reported by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define GBQ_DEFINE_ERROR(Name)                                    \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

GBQ_DEFINE_ERROR(ValidationFailure);
GBQ_DEFINE_ERROR(DegenerateSlowness);
GBQ_DEFINE_ERROR(StationaryPhasePoint);
GBQ_DEFINE_ERROR(IntegratorFailure);
GBQ_DEFINE_ERROR(InvariantBreach);
GBQ_DEFINE_ERROR(UnsupportedOrder);
GBQ_DEFINE_ERROR(GridTooCoarse);
GBQ_DEFINE_ERROR(UnsupportedScenario);
GBQ_DEFINE_ERROR(InvalidPlan);
GBQ_DEFINE_ERROR(StencilOutOfDomain);
GBQ_DEFINE_ERROR(SweepFailed);
GBQ_DEFINE_ERROR(UnknownFigure);

#undef GBQ_DEFINE_ERROR

/// Config errors carry the offending line (0 when not line-specific) and key.
class ConfigParseError : public Error {
 public:
  ConfigParseError(int line, std::string field, const std::string& what)
      : Error("ConfigParseError", what), line_(line), field_(std::move(field)) {}
  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  int line_;
  std::string field_;
};

}  // namespace gbq
