#include "gary/error.hpp"

namespace gary {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::NoVowel: return "NoVowel";
    case ErrorCode::NonPositiveDuration: return "NonPositiveDuration";
    case ErrorCode::NonPositiveRate: return "NonPositiveRate";
    case ErrorCode::WordTooWide: return "WordTooWide";
    case ErrorCode::PhraseNotOnPage: return "PhraseNotOnPage";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::ClockRegression: return "ClockRegression";
    case ErrorCode::UnsupportedControl: return "UnsupportedControl";
    case ErrorCode::SessionFinished: return "SessionFinished";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::CorruptLog: return "CorruptLog";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace gary
