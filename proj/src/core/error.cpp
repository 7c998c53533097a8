#include "fcseg/error.hpp"

#include <iostream>
#include <mutex>

namespace fcseg {

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ConfigError:
      return ErrorCategory::Config;
    case ErrorCode::IoFailure:
    case ErrorCode::FileTooShort:
    case ErrorCode::FileTooLong:
    case ErrorCode::DimsNonPositive:
    case ErrorCode::NonFiniteData:
    case ErrorCode::OutOfBounds:
    case ErrorCode::DimMismatch:
    case ErrorCode::UnknownClass:
      return ErrorCategory::Data;
    case ErrorCode::EmptySeedSet:
    case ErrorCode::TooFewSeeds:
    case ErrorCode::MissingParams:
    case ErrorCode::DegenerateData:
    case ErrorCode::Untrained:
    case ErrorCode::NoValidSeed:
    case ErrorCode::FusionPrecondition:
      return ErrorCategory::Algorithm;
  }
  return ErrorCategory::Algorithm;
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::ConfigError: return "config-error";
    case ErrorCode::IoFailure: return "io-failure";
    case ErrorCode::FileTooShort: return "file-too-short";
    case ErrorCode::FileTooLong: return "file-too-long";
    case ErrorCode::DimsNonPositive: return "dims-nonpositive";
    case ErrorCode::NonFiniteData: return "non-finite-data";
    case ErrorCode::OutOfBounds: return "out-of-bounds";
    case ErrorCode::DimMismatch: return "dim-mismatch";
    case ErrorCode::UnknownClass: return "unknown-class";
    case ErrorCode::EmptySeedSet: return "empty-seed-set";
    case ErrorCode::TooFewSeeds: return "too-few-seeds";
    case ErrorCode::MissingParams: return "missing-params";
    case ErrorCode::DegenerateData: return "degenerate-data";
    case ErrorCode::Untrained: return "untrained-model";
    case ErrorCode::NoValidSeed: return "no-valid-seed";
    case ErrorCode::FusionPrecondition: return "fusion-precondition";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

namespace {

std::mutex g_warning_mutex;
WarningHandler g_warning_handler;

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(g_warning_mutex);
  std::swap(handler, g_warning_handler);
  return handler;
}

void warn(std::string_view message) {
  std::lock_guard lock(g_warning_mutex);
  if (g_warning_handler) {
    g_warning_handler(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

}  // namespace fcseg
