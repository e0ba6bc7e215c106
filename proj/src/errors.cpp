#include "fmpols/errors.hpp"

namespace fmpols {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::Divergence: return "Divergence";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::NotObservable: return "NotObservable";
    case ErrorCode::NotSupported: return "NotSupported";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::InvalidLevel: return "InvalidLevel";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace fmpols
