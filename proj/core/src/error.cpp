#include "abf/error.hpp"

namespace abf {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyCalibration: return "EmptyCalibration";
    case Errc::EmptySeries: return "EmptySeries";
    case Errc::DegenerateBaselineTrial: return "DegenerateBaselineTrial";
    case Errc::MissingCondition: return "MissingCondition";
    case Errc::InvalidBand: return "InvalidBand";
    case Errc::SourceUnavailable: return "SourceUnavailable";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::CalibrationMissing: return "CalibrationMissing";
    case Errc::SourceLost: return "SourceLost";
    case Errc::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::StateConflict: return "StateConflict";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace abf
