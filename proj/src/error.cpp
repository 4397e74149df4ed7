#include "flmcpd/error.hpp"

namespace flmcpd {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::NonSymmetric: return "NonSymmetric";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::SingularDesign: return "SingularDesign";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::LagTooLarge: return "LagTooLarge";
    case ErrorKind::DegenerateSeries: return "DegenerateSeries";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorClass classify(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::KTooLarge:
    case ErrorKind::AlphaOutOfRange:
    case ErrorKind::ConfigError:
      return ErrorClass::Usage;
    case ErrorKind::GridMismatch:
    case ErrorKind::InsufficientData:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::LagTooLarge:
    case ErrorKind::NonFiniteInput:
    case ErrorKind::ParseError:
    case ErrorKind::IoError:
      return ErrorClass::Data;
    case ErrorKind::NonSymmetric:
    case ErrorKind::SingularDesign:
    case ErrorKind::DegenerateSeries:
    case ErrorKind::RankDeficient:
      return ErrorClass::Numerical;
  }
  return ErrorClass::Numerical;
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace flmcpd
