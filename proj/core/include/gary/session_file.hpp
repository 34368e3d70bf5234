#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "gary/engine.hpp"
#include "gary/layout.hpp"

namespace gary {

inline constexpr std::string_view kSessionFormat = "gary-session/1";

/// Everything needed to rebuild the engine a log was recorded against.
struct SessionHeader {
  std::string session_id;
  SessionConfig config;
  std::string text_id;
  std::string title;
  std::string raw_text;
  int max_words = kMaxPhraseWords;
  Viewport viewport;
  nlohmann::json meta = nlohmann::json::object();  // free-form provenance (profile, seed, ...)

  Engine make_engine() const;
};

void to_json(nlohmann::json& j, const SessionHeader& h);
void from_json(const nlohmann::json& j, SessionHeader& h);

/// Session file: one JSON header line, one line per log record, and a final
/// line carrying the end clock, the final state hash and an FNV-1a digest of
/// every preceding byte.
std::string serialize_session(const SessionHeader& header, const Engine& engine);

struct ReplayVerdict {
  bool pass = false;
  std::string reason;
};

/// Re-executes the recorded inputs through a fresh engine and compares the
/// regenerated log, the final state hash and the content digest. Throws
/// CorruptLog when the file cannot be parsed.
ReplayVerdict verify_session(std::string_view content);

/// Writes to `path`, creating parent directories.
void write_text_file(const std::string& path, std::string_view content);
std::string read_text_file(const std::string& path);

}  // namespace gary
