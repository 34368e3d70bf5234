#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gary {

enum class ErrorCode {
  EmptyText,
  NoVowel,
  NonPositiveDuration,
  NonPositiveRate,
  WordTooWide,
  PhraseNotOnPage,
  InsufficientSamples,
  DegenerateGeometry,
  EmptyDocument,
  ClockRegression,
  UnsupportedControl,
  SessionFinished,
  UnknownPreset,
  Timeout,
  CorruptLog,
  ProtocolViolation,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (CLI, wire protocol) can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gary
