#include "gary/service.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "gary/error.hpp"

namespace gary {

SessionService::SessionService(std::string session_id, const Material& text, ServiceOptions opts)
    : opts_(opts),
      engine_(text.seg, text.pages, opts.session),
      calibration_(CalibrationModel::identity(text.viewport.width_px, text.viewport.height_px)),
      detector_(opts.fixation, opts.refresh_ms) {
  header_.session_id = std::move(session_id);
  header_.config = opts.session;
  header_.text_id = text.seg.document.id;
  header_.title = text.seg.document.title;
  header_.raw_text = text.seg.document.raw_text;
  header_.max_words = text.max_words;
  header_.viewport = text.viewport;
  header_.meta = {{"source", "service"}, {"protocol", kProtocolVersion}};
}

nlohmann::json SessionService::frame(std::string_view type, nlohmann::json payload) const {
  return {{"type", type}, {"session_id", header_.session_id}, {"payload", std::move(payload)}};
}

nlohmann::json SessionService::page_frame() const {
  return frame("page", engine_.pages()[engine_.state().page_index]);
}

nlohmann::json SessionService::state_frame() {
  const EngineState& s = engine_.state();
  nlohmann::json payload = {{"t_ms", s.clock_ms},
                            {"phrase_index", s.phrase_index},
                            {"page_index", s.page_index},
                            {"playback", to_string(s.playback)},
                            {"pause_reason", nullptr},
                            {"highlight", nullptr},
                            {"mode", to_string(s.mode)}};
  if (s.playback == Playback::Paused) payload["pause_reason"] = to_string(s.pause_reason);
  if (s.playback != Playback::Finished) {
    const WordRange hl = engine_.current_highlight();
    payload["highlight"] = {{"first", hl.first}, {"last", hl.last}};
  }
  nlohmann::json f = frame("state", std::move(payload));
  f["seq"] = seq_++;
  return f;
}

void SessionService::push_changes(Output& out) {
  const EngineState& s = engine_.state();
  if (sent_page_ != s.page_index) {
    out.frames.push_back(page_frame());
    sent_page_ = s.page_index;
  }
  const auto now = std::make_tuple(s.phrase_index, s.page_index, s.playback, s.pause_reason);
  if (sent_state_ != now) {
    out.frames.push_back(state_frame());
    sent_state_ = now;
  }
  if (finished() && !sent_metrics_) {
    out.frames.push_back(frame("metrics", compute_metrics(engine_)));
    sent_metrics_ = true;
  }
}

SessionService::Output SessionService::fail(ErrorCode code, std::string message, bool close) {
  Output out;
  out.frames.push_back(frame("error", {{"code", to_string(code)}, {"message", std::move(message)}}));
  out.close = close;
  closed_ = closed_ || close;
  return out;
}

SessionService::Output SessionService::open(double now_ms) {
  Output out;
  clock_ms_ = std::max(clock_ms_, now_ms);
  engine_.tick(clock_ms_);
  out.frames.push_back(frame("hello", {{"protocol", kProtocolVersion},
                                       {"config", engine_.config()},
                                       {"viewport", header_.viewport},
                                       {"text", {{"id", header_.text_id}, {"title", header_.title}}},
                                       {"phrases", engine_.text().phrases.size()},
                                       {"pages", engine_.pages().size()}}));
  push_changes(out);
  return out;
}

double SessionService::server_time(double arrival_ms) {
  clock_ms_ = std::max(arrival_ms, clock_ms_);
  return clock_ms_;
}

SessionService::Output SessionService::handle(std::string_view text, double arrival_ms) {
  if (closed_) return fail(ErrorCode::ProtocolViolation, "session is closed", true);
  nlohmann::json msg = nlohmann::json::parse(text, nullptr, false);
  if (msg.is_discarded() || !msg.is_object()) return fail(ErrorCode::ProtocolViolation, "frame is not a JSON object", true);
  if (!msg.contains("type") || !msg["type"].is_string())
    return fail(ErrorCode::ProtocolViolation, "missing message type", true);
  const std::string type = msg["type"].get<std::string>();
  const nlohmann::json payload = msg.value("payload", nlohmann::json::object());
  if (!payload.is_object()) return fail(ErrorCode::ProtocolViolation, "payload must be an object", true);

  Output out;
  try {
    if (type == "gaze") {
      const auto& jt = payload.at("t_ms");
      const auto& jx = payload.at("x");
      const auto& jy = payload.at("y");
      if (!jt.is_number() || !jx.is_number() || !jy.is_number())
        return fail(ErrorCode::ProtocolViolation, "gaze fields must be numbers", true);
      const double client_t = jt.get<double>();
      if (last_client_t_ && !(client_t > *last_client_t_))
        return fail(ErrorCode::ProtocolViolation, "gaze t_ms must increase", true);
      last_client_t_ = client_t;
      // The detector needs strictly increasing sample times; collisions are
      // nudged forward by a microsecond.
      double t = server_time(arrival_ms);
      if (last_gaze_ms_ && t <= *last_gaze_ms_) t = clock_ms_ = *last_gaze_ms_ + 1e-3;
      last_gaze_ms_ = t;
      const RawGazeSample raw{t, jx.get<double>(), jy.get<double>(), payload.value("valid", true)};
      engine_.tick(t);
      for (const auto& r : detector_.push(calibrate_sample(calibration_, raw))) {
        if (r.phase != FixationStream::Phase::Closed) engine_.fixation(r.fixation, t);
      }
    } else if (type == "control") {
      const Control action = parse_control(payload.at("action").get<std::string>());
      const double t = server_time(arrival_ms);
      engine_.control(action, t);
    } else if (type == "page") {
      const auto page = payload.at("page_index").get<std::size_t>();
      std::vector<WordBox> boxes;
      for (const auto& b : payload.at("boxes")) {
        boxes.push_back({b.at("word").get<std::size_t>(),
                         {b.at("x").get<double>(), b.at("y").get<double>(), b.at("w").get<double>(),
                          b.at("h").get<double>()}});
      }
      const double t = server_time(arrival_ms);
      engine_.update_layout(page, boxes, t);
    } else {
      return fail(ErrorCode::ProtocolViolation, "unknown message type '" + type + "'", true);
    }
  } catch (const Error& e) {
    // Mode contract errors are reported; the session carries on.
    if (e.code() == ErrorCode::UnsupportedControl) {
      Output err = fail(e.code(), e.what(), false);
      push_changes(err);
      return err;
    }
    return fail(ErrorCode::ProtocolViolation, e.what(), true);
  } catch (const nlohmann::json::exception& e) {
    return fail(ErrorCode::ProtocolViolation, e.what(), true);
  }
  push_changes(out);
  return out;
}

SessionService::Output SessionService::tick(double now_ms) {
  Output out;
  if (closed_ || now_ms < clock_ms_) return out;
  clock_ms_ = now_ms;
  engine_.tick(now_ms);
  push_changes(out);
  return out;
}

std::optional<std::string> save_session_log(const SessionService& service) {
  const char* dir = std::getenv("GARY_LOG_DIR");
  if (!dir || !*dir) return std::nullopt;
  const std::string path = (std::filesystem::path(dir) / (service.session_id() + ".jsonl")).string();
  write_text_file(path, service.session_file());
  return path;
}

}  // namespace gary
