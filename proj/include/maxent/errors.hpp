#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace maxent {

enum class ErrorCode {
  MalformedHeader,
  CountMismatch,
  ZeroIndex,
  DuplicateIndex,
  NonPositiveAlpha,
  NegativeTarget,
  NonNumericToken,
  DuplicateEvent,
  ArityMismatch,
  IllegalNesting,
  NonUnitFrequency,
  UnknownFeature,
  ClassMismatch,
  SymbolOutOfRange,
  EmptyCorpus,
  ZeroTarget,
  NoSolution,
  NoInput,
  IncompatibleInputs,
  InvariantViolation,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader:   return "MalformedHeader";
    case ErrorCode::CountMismatch:     return "CountMismatch";
    case ErrorCode::ZeroIndex:         return "ZeroIndex";
    case ErrorCode::DuplicateIndex:    return "DuplicateIndex";
    case ErrorCode::NonPositiveAlpha:  return "NonPositiveAlpha";
    case ErrorCode::NegativeTarget:    return "NegativeTarget";
    case ErrorCode::NonNumericToken:   return "NonNumericToken";
    case ErrorCode::DuplicateEvent:    return "DuplicateEvent";
    case ErrorCode::ArityMismatch:     return "ArityMismatch";
    case ErrorCode::IllegalNesting:    return "IllegalNesting";
    case ErrorCode::NonUnitFrequency:  return "NonUnitFrequency";
    case ErrorCode::UnknownFeature:    return "UnknownFeature";
    case ErrorCode::ClassMismatch:     return "ClassMismatch";
    case ErrorCode::SymbolOutOfRange:  return "SymbolOutOfRange";
    case ErrorCode::EmptyCorpus:       return "EmptyCorpus";
    case ErrorCode::ZeroTarget:        return "ZeroTarget";
    case ErrorCode::NoSolution:        return "NoSolution";
    case ErrorCode::NoInput:           return "NoInput";
    case ErrorCode::IncompatibleInputs:return "IncompatibleInputs";
    case ErrorCode::InvariantViolation:return "InvariantViolation";
    case ErrorCode::IoError:           return "IoError";
  }
  return "UnknownError";
}

// Exception carrying a stable error code plus, for text inputs, the 1-based
// line where the offending token started (0 when not tied to input text).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::size_t line = 0)
      : std::runtime_error(format(code, message, line)), code_(code), line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(ErrorCode code, const std::string& message, std::size_t line) {
    std::string s(to_string(code));
    if (line > 0) {
      s += " (line ";
      s += std::to_string(line);
      s += ")";
    }
    s += ": ";
    s += message;
    return s;
  }

  ErrorCode code_;
  std::size_t line_;
};

}  // namespace maxent
