#include "gary/session_file.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "gary/error.hpp"

namespace gary {

Engine SessionHeader::make_engine() const {
  const Document doc = tokenize(raw_text, text_id, title);
  SegmentedText seg = segment_phrases(doc, max_words);
  std::vector<PageLayout> pages = paginate(seg, viewport);
  return Engine(std::move(seg), std::move(pages), config);
}

void to_json(nlohmann::json& j, const SessionHeader& h) {
  j = {{"format", kSessionFormat},
       {"session_id", h.session_id},
       {"config", h.config},
       {"text", {{"id", h.text_id}, {"title", h.title}, {"raw", h.raw_text}, {"max_words", h.max_words}}},
       {"viewport", h.viewport},
       {"meta", h.meta}};
}

void from_json(const nlohmann::json& j, SessionHeader& h) {
  if (j.at("format").get<std::string>() != kSessionFormat) {
    throw Error(ErrorCode::CorruptLog, "unsupported session format");
  }
  h.session_id = j.at("session_id").get<std::string>();
  h.config = j.at("config").get<SessionConfig>();
  const auto& text = j.at("text");
  h.text_id = text.at("id").get<std::string>();
  h.title = text.at("title").get<std::string>();
  h.raw_text = text.at("raw").get<std::string>();
  h.max_words = text.at("max_words").get<int>();
  h.viewport = j.at("viewport").get<Viewport>();
  h.meta = j.at("meta");
}

namespace {

std::string body_of(const SessionHeader& header, const std::vector<EngineEvent>& log) {
  std::string body = nlohmann::json(header).dump();
  body += '\n';
  for (const EngineEvent& e : log) {
    body += nlohmann::json(e).dump();
    body += '\n';
  }
  return body;
}

std::string footer_of(double end_ms, std::uint64_t state_hash, std::uint64_t digest) {
  return nlohmann::json{{"end_ms", end_ms},
                        {"final_state_hash", hex64(state_hash)},
                        {"log_digest", hex64(digest)}}
             .dump() +
         '\n';
}

}  // namespace

std::string serialize_session(const SessionHeader& header, const Engine& engine) {
  std::string body = body_of(header, engine.log());
  const std::string footer = footer_of(engine.state().clock_ms, engine.state_hash(), fnv1a(body));
  return body + footer;
}

ReplayVerdict verify_session(std::string_view content) {
  // Split into lines; every line, including the last, must end with '\n'.
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) throw Error(ErrorCode::CorruptLog, "truncated final line");
    lines.push_back(content.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (lines.size() < 2) throw Error(ErrorCode::CorruptLog, "missing header or footer");

  // The footer is read first so that any damage to the body shows up as a
  // digest mismatch rather than a parse error.
  double end_ms = 0.0;
  std::string expected_hash;
  std::string expected_digest;
  try {
    const auto footer = nlohmann::json::parse(lines.back());
    end_ms = footer.at("end_ms").get<double>();
    expected_hash = footer.at("final_state_hash").get<std::string>();
    expected_digest = footer.at("log_digest").get<std::string>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::CorruptLog, std::string("bad footer: ") + ex.what());
  }

  const std::string_view body = content.substr(0, content.size() - lines.back().size() - 1);
  if (hex64(fnv1a(body)) != expected_digest) return {false, "content digest mismatch"};

  SessionHeader header;
  std::vector<EngineEvent> recorded;
  try {
    header = nlohmann::json::parse(lines.front()).get<SessionHeader>();
    recorded.reserve(lines.size() - 2);
    for (std::size_t k = 1; k + 1 < lines.size(); ++k) {
      recorded.push_back(nlohmann::json::parse(lines[k]).get<EngineEvent>());
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::CorruptLog, ex.what());
  } catch (const Error& ex) {
    throw Error(ErrorCode::CorruptLog, ex.what());
  }

  std::optional<Engine> engine;
  try {
    engine.emplace(header.make_engine());
    for (const EngineEvent& e : recorded) {
      if (!e.is_input()) continue;
      switch (e.kind) {
        case EventKind::FixationIn: engine->fixation(e.fixation, e.t_ms); break;
        case EventKind::ControlApplied: engine->control(e.action, e.t_ms); break;
        case EventKind::LayoutUpdate: engine->update_layout(e.page, e.boxes, e.t_ms); break;
        default: break;
      }
    }
    engine->tick(end_ms);
  } catch (const Error& ex) {
    return {false, std::string("replay failed: ") + ex.what()};
  }

  if (body_of(header, engine->log()) != body) return {false, "regenerated log differs from recording"};
  if (hex64(engine->state_hash()) != expected_hash) return {false, "final state hash mismatch"};
  // Distinct spellings of the same number parse equal; only the canonical one is accepted.
  if (footer_of(end_ms, engine->state_hash(), fnv1a(body)) != std::string(lines.back()) + '\n')
    return {false, "footer is not in canonical form"};
  return {true, "final state hash " + expected_hash};
}

void write_text_file(const std::string& path, std::string_view content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace gary
