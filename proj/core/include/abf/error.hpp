#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace abf {

enum class Errc {
  EmptyCalibration,
  EmptySeries,
  DegenerateBaselineTrial,
  MissingCondition,
  InvalidBand,
  SourceUnavailable,
  MalformedRecord,
  CalibrationMissing,
  SourceLost,
  SchemaVersionMismatch,
  InvalidArgument,
  StateConflict,
  Io,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace abf
