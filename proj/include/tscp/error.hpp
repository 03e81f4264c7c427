#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tscp {

enum class ErrorKind {
  InvalidArgument,
  SeriesTooShort,
  LengthMismatch,
  EmptyCalibration,
  ContextTooLong,
  ForecasterFailure,
  EmptyContext,
  ContextShorterThanSeason,
  ContextTooShort,
  ProtocolMismatch,
  Unreachable,
  Timeout,
  MalformedResponse,
  AdapterError,
  EmptyTestSet,
  NaiveZeroWidth,
  NaiveZeroError,
  UnitMismatch,
  ParseError,
  NonUniformSpacing,
  MissingValue,
  DownloadFailed,
  HashMismatch,
  ConfigError,
  ScenarioDoesNotFit,
  IoError,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and the
// harness failure log) can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace tscp
