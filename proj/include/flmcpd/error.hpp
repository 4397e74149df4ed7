#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flmcpd {

enum class ErrorKind {
  GridMismatch,
  InsufficientData,
  NonSymmetric,
  KTooLarge,
  SingularDesign,
  DimensionMismatch,
  LagTooLarge,
  DegenerateSeries,
  NonFiniteInput,
  RankDeficient,
  AlphaOutOfRange,
  ConfigError,
  ParseError,
  IoError,
};

// Broad classes used to map errors onto CLI exit codes.
enum class ErrorClass { Usage, Data, Numerical };

std::string_view to_string(ErrorKind kind);
ErrorClass classify(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace flmcpd
