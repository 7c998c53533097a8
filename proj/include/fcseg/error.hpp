#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fcseg {

/// Distinct failure kinds. Each maps onto one coarse category that the C API
/// and the command-line tool report as a status / exit code.
enum class ErrorCode {
  InvalidArgument,
  ConfigError,
  IoFailure,
  FileTooShort,
  FileTooLong,
  DimsNonPositive,
  NonFiniteData,
  OutOfBounds,
  DimMismatch,
  UnknownClass,
  EmptySeedSet,
  TooFewSeeds,
  MissingParams,
  DegenerateData,
  Untrained,
  NoValidSeed,
  FusionPrecondition,
};

enum class ErrorCategory { Config = 1, Data = 2, Algorithm = 3 };

ErrorCategory category_of(ErrorCode code);
const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }
  /// Message without the code-name prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

// Non-fatal diagnostics (sigma floored, duplicate seed dropped, ...).
using WarningHandler = std::function<void(std::string_view)>;

/// Installs a process-wide warning sink; an empty handler restores the
/// default (stderr). Returns the previous handler.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace fcseg
