#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace qfb {

/// Base of all domain errors. Carries a stable machine-readable code and an
/// optional location (a JSON pointer for scenario files, a record prefix for
/// filtering errors) so the CLI can emit one parsable line per failure.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message, std::string location = {})
      : std::runtime_error(message),
        code_(std::move(code)),
        location_(std::move(location)) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& location() const noexcept { return location_; }

 private:
  std::string code_;
  std::string location_;
};

#define QFB_DEFINE_ERROR(NAME)                                        \
  class NAME : public Error {                                         \
   public:                                                            \
    explicit NAME(const std::string& message, std::string loc = {})   \
        : Error(#NAME, message, std::move(loc)) {}                    \
  }

QFB_DEFINE_ERROR(DimensionError);
QFB_DEFINE_ERROR(NumericsError);
QFB_DEFINE_ERROR(StateError);
QFB_DEFINE_ERROR(InvariantError);
QFB_DEFINE_ERROR(ZeroProbabilityError);
QFB_DEFINE_ERROR(NotCompleteMeasurementError);
QFB_DEFINE_ERROR(OracleTooLargeError);
QFB_DEFINE_ERROR(StrategyError);
QFB_DEFINE_ERROR(ConfigError);
QFB_DEFINE_ERROR(SchemaError);
QFB_DEFINE_ERROR(IoError);
QFB_DEFINE_ERROR(UsageError);

#undef QFB_DEFINE_ERROR

}  // namespace qfb
