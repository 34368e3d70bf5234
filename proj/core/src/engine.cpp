#include "gary/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <string>

#include <nlohmann/json.hpp>

#include "gary/error.hpp"

namespace gary {

std::string_view to_string(Mode m) { return m == Mode::Gary ? "gary" : "traditional"; }

std::string_view to_string(Playback p) {
  switch (p) {
    case Playback::Playing: return "playing";
    case Playback::Paused: return "paused";
    case Playback::Finished: return "finished";
  }
  return "?";
}

std::string_view to_string(PauseReason r) {
  switch (r) {
    case PauseReason::NotStarted: return "NotStarted";
    case PauseReason::NoPermit: return "NoPermit";
    case PauseReason::GazeAway: return "GazeAway";
    case PauseReason::Control: return "Control";
  }
  return "?";
}

std::string_view to_string(Control c) {
  switch (c) {
    case Control::Play: return "play";
    case Control::Pause: return "pause";
    case Control::SkipForward: return "skip_forward";
    case Control::SkipBackward: return "skip_backward";
  }
  return "?";
}

std::string_view to_string(ControlOutcome o) { return o == ControlOutcome::Applied ? "applied" : "noop"; }

std::string_view to_string(FixationRegion r) {
  switch (r) {
    case FixationRegion::Lookahead: return "Lookahead";
    case FixationRegion::Active: return "Active";
    case FixationRegion::Off: return "Off";
  }
  return "?";
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::PhraseStart: return "PhraseStart";
    case EventKind::PhraseEnd: return "PhraseEnd";
    case EventKind::Pause: return "Pause";
    case EventKind::Resume: return "Resume";
    case EventKind::PageTurn: return "PageTurn";
    case EventKind::ControlApplied: return "ControlApplied";
    case EventKind::FixationIn: return "FixationIn";
    case EventKind::Finish: return "Finish";
    case EventKind::LayoutUpdate: return "LayoutUpdate";
  }
  return "?";
}

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const Enum (&values)[N], std::string_view what) {
  for (Enum v : values) {
    if (to_string(v) == s) return v;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown " + std::string(what) + " '" + std::string(s) + "'");
}

constexpr Mode kModes[] = {Mode::Gary, Mode::Traditional};
constexpr Control kControls[] = {Control::Play, Control::Pause, Control::SkipForward, Control::SkipBackward};
constexpr PauseReason kReasons[] = {PauseReason::NotStarted, PauseReason::NoPermit, PauseReason::GazeAway,
                                    PauseReason::Control};
constexpr ControlOutcome kOutcomes[] = {ControlOutcome::Applied, ControlOutcome::NoOp};
constexpr FixationRegion kRegions[] = {FixationRegion::Lookahead, FixationRegion::Active, FixationRegion::Off};
constexpr EventKind kKinds[] = {EventKind::PhraseStart, EventKind::PhraseEnd,      EventKind::Pause,
                                EventKind::Resume,      EventKind::PageTurn,       EventKind::ControlApplied,
                                EventKind::FixationIn,  EventKind::Finish,         EventKind::LayoutUpdate};

}  // namespace

Mode parse_mode(std::string_view s) { return parse_enum(s, kModes, "mode"); }
Control parse_control(std::string_view s) { return parse_enum(s, kControls, "control"); }

AudioTimeline build_timeline(const SegmentedText& seg, double audio_rate) {
  if (!(audio_rate > 0.0)) throw Error(ErrorCode::NonPositiveRate, "audio rate must be positive");
  AudioTimeline tl;
  tl.duration_ms.reserve(seg.phrases.size());
  tl.start_ms.reserve(seg.phrases.size());
  for (const Phrase& p : seg.phrases) {
    tl.start_ms.push_back(tl.total_ms);
    const double d = 1000.0 * p.syllable_count / audio_rate;
    tl.duration_ms.push_back(d);
    tl.total_ms += d;
  }
  return tl;
}

// ---------------------------------------------------------------------------

Engine::Engine(SegmentedText seg, std::vector<PageLayout> pages, SessionConfig cfg)
    : seg_(std::move(seg)), pages_(std::move(pages)), cfg_(cfg) {
  if (seg_.phrases.empty() || pages_.empty()) {
    throw Error(ErrorCode::EmptyDocument, "session needs at least one phrase and one page");
  }
  if (!(cfg_.grace_ms >= 0.0)) throw Error(ErrorCode::InvalidArgument, "grace_ms must be non-negative");
  timeline_ = build_timeline(seg_, cfg_.audio_rate);
  phrase_page_.reserve(seg_.phrases.size());
  for (const Phrase& p : seg_.phrases) phrase_page_.push_back(page_of_phrase(pages_, p.index));
  state_.mode = cfg_.mode;
  state_.page_index = phrase_page_.front();
}

EngineEvent Engine::make(EventKind kind, double t) const {
  EngineEvent e;
  e.t_ms = t;
  e.kind = kind;
  e.phrase = state_.phrase_index;
  e.page = state_.page_index;
  return e;
}

void Engine::emit(EngineEvent e, std::vector<EngineEvent>& out) {
  log_.push_back(e);
  out.push_back(std::move(e));
}

std::vector<EngineEvent> Engine::tick(double now_ms) {
  std::vector<EngineEvent> out;
  play_until(now_ms, out);
  return out;
}

void Engine::play_until(double now_ms, std::vector<EngineEvent>& out) {
  if (now_ms < state_.clock_ms) {
    throw Error(ErrorCode::ClockRegression, "clock moved backwards");
  }
  const bool gated = cfg_.mode == Mode::Gary;
  while (state_.playback == Playback::Playing) {
    const double end_t = state_.anchor_ms + timeline_.duration_ms[state_.phrase_index];
    const double gaze_deadline =
        gated ? state_.last_on_text_ms + cfg_.grace_ms : std::numeric_limits<double>::infinity();
    if (end_t <= now_ms && end_t <= gaze_deadline) {
      state_.clock_ms = end_t;
      complete_phrase(end_t, out);
      continue;
    }
    if (now_ms > gaze_deadline) {
      state_.clock_ms = gaze_deadline;
      state_.playback = Playback::Paused;
      state_.pause_reason = PauseReason::GazeAway;
      state_.paused_elapsed_ms = gaze_deadline - state_.anchor_ms;
      EngineEvent e = make(EventKind::Pause, gaze_deadline);
      e.reason = PauseReason::GazeAway;
      e.elapsed_ms = state_.paused_elapsed_ms;
      emit(std::move(e), out);
    }
    break;
  }
  state_.clock_ms = now_ms;
}

void Engine::complete_phrase(double t, std::vector<EngineEvent>& out) {
  const std::size_t i = state_.phrase_index;
  if (i + 1 == seg_.phrases.size()) {
    emit(make(EventKind::PhraseEnd, t), out);
    state_.playback = Playback::Finished;
    state_.paused_elapsed_ms = timeline_.duration_ms[i];
    state_.advance_permit = false;
    emit(make(EventKind::Finish, t), out);
    return;
  }
  const bool page_end = phrase_page_[i + 1] != phrase_page_[i];
  if (cfg_.mode == Mode::Traditional || state_.advance_permit || page_end) {
    move_to(i + 1, t, true, out);
    return;
  }
  state_.playback = Playback::Paused;
  state_.pause_reason = PauseReason::NoPermit;
  state_.paused_elapsed_ms = timeline_.duration_ms[i];
  EngineEvent e = make(EventKind::Pause, t);
  e.reason = PauseReason::NoPermit;
  e.elapsed_ms = state_.paused_elapsed_ms;
  emit(std::move(e), out);
}

void Engine::move_to(std::size_t phrase, double t, bool natural, std::vector<EngineEvent>& out) {
  if (natural) emit(make(EventKind::PhraseEnd, t), out);
  state_.phrase_index = phrase;
  state_.advance_permit = false;
  if (state_.playback == Playback::Playing) {
    state_.anchor_ms = t;
  } else {
    state_.paused_elapsed_ms = 0.0;
  }
  if (phrase_page_[phrase] != state_.page_index) {
    state_.page_index = phrase_page_[phrase];
    if (cfg_.mode == Mode::Gary) state_.settle_until_ms = t + cfg_.page_settle_ms;
    emit(make(EventKind::PageTurn, t), out);
  }
  emit(make(EventKind::PhraseStart, t), out);
}

void Engine::resume(double t, std::vector<EngineEvent>& out) {
  state_.playback = Playback::Playing;
  state_.anchor_ms = t - state_.paused_elapsed_ms;
  emit(make(EventKind::Resume, t), out);
}

std::vector<EngineEvent> Engine::fixation(const Fixation& f, double now_ms) {
  std::vector<EngineEvent> out;
  play_until(now_ms, out);

  const FixationRegion region = classify(f.centroid);
  const bool ignored = cfg_.mode == Mode::Traditional || !state_.started() ||
                       state_.playback == Playback::Finished;
  EngineEvent e = make(EventKind::FixationIn, now_ms);
  e.region = region;
  e.ignored = ignored;
  e.fixation = f;
  emit(std::move(e), out);
  if (ignored || region == FixationRegion::Off) return out;

  state_.last_on_text_ms = now_ms;
  if (region == FixationRegion::Lookahead) state_.advance_permit = true;
  if (state_.playback != Playback::Paused) return out;

  if (state_.pause_reason == PauseReason::NoPermit && state_.advance_permit) {
    state_.playback = Playback::Playing;
    emit(make(EventKind::Resume, now_ms), out);
    move_to(state_.phrase_index + 1, now_ms, true, out);
  } else if (state_.pause_reason == PauseReason::GazeAway) {
    resume(now_ms, out);
  }
  return out;
}

std::vector<EngineEvent> Engine::control(Control action, double now_ms) {
  if ((action == Control::SkipForward || action == Control::SkipBackward) && cfg_.mode == Mode::Gary) {
    throw Error(ErrorCode::UnsupportedControl, "skip controls are not available in GARY mode");
  }
  std::vector<EngineEvent> out;
  play_until(now_ms, out);

  EngineEvent e = make(EventKind::ControlApplied, now_ms);
  e.action = action;
  e.outcome = ControlOutcome::NoOp;
  const std::size_t log_pos = log_.size();
  emit(e, out);
  const std::size_t out_pos = out.size() - 1;

  bool applied = false;
  const std::size_t i = state_.phrase_index;
  if (state_.playback != Playback::Finished) {
    switch (action) {
      case Control::Play:
        if (state_.playback == Playback::Paused) {
          if (state_.pause_reason == PauseReason::NotStarted) {
            state_.playback = Playback::Playing;
            state_.anchor_ms = now_ms - state_.paused_elapsed_ms;
            state_.last_on_text_ms = now_ms;
            emit(make(EventKind::PhraseStart, now_ms), out);
            applied = true;
          } else if (state_.pause_reason != PauseReason::NoPermit) {
            state_.last_on_text_ms = now_ms;
            resume(now_ms, out);
            applied = true;
          }
        }
        break;
      case Control::Pause:
        if (state_.playback == Playback::Playing) {
          state_.playback = Playback::Paused;
          state_.pause_reason = PauseReason::Control;
          state_.paused_elapsed_ms = now_ms - state_.anchor_ms;
          EngineEvent p = make(EventKind::Pause, now_ms);
          p.reason = PauseReason::Control;
          p.elapsed_ms = state_.paused_elapsed_ms;
          emit(std::move(p), out);
          applied = true;
        }
        break;
      case Control::SkipForward:
        if (i + 1 < seg_.phrases.size()) {
          move_to(i + 1, now_ms, false, out);
          applied = true;
        }
        break;
      case Control::SkipBackward:
        if (i > 0) {
          move_to(i - 1, now_ms, false, out);
          applied = true;
        }
        break;
    }
  }
  if (applied) {
    log_[log_pos].outcome = ControlOutcome::Applied;
    out[out_pos].outcome = ControlOutcome::Applied;
  }
  return out;
}

std::vector<EngineEvent> Engine::update_layout(std::size_t page_index, std::span<const WordBox> boxes,
                                               double now_ms) {
  if (page_index >= pages_.size()) throw Error(ErrorCode::InvalidArgument, "no such page");
  PageLayout& page = pages_[page_index];
  if (boxes.size() != page.words.size()) {
    throw Error(ErrorCode::InvalidArgument, "layout update must cover every word of the page exactly once");
  }
  std::vector<bool> seen(page.words.size(), false);
  for (const WordBox& wb : boxes) {
    if (!page.has_word(wb.word) || seen[wb.word - page.words.first] || !(wb.box.w >= 0) || !(wb.box.h >= 0)) {
      throw Error(ErrorCode::InvalidArgument, "layout update must cover every word of the page exactly once");
    }
    seen[wb.word - page.words.first] = true;
  }

  std::vector<EngineEvent> out;
  play_until(now_ms, out);
  for (const WordBox& wb : boxes) {
    for (Line& line : page.lines) {
      if (line.words.empty() || wb.word < line.words.front().word || wb.word > line.words.back().word) continue;
      line.words[wb.word - line.words.front().word].box = wb.box;
    }
  }
  EngineEvent e = make(EventKind::LayoutUpdate, now_ms);
  e.page = page_index;
  e.boxes.assign(boxes.begin(), boxes.end());
  emit(std::move(e), out);
  return out;
}

WordRange Engine::current_highlight() const {
  if (state_.playback == Playback::Finished) throw Error(ErrorCode::SessionFinished, "session has finished");
  return seg_.phrases[state_.phrase_index].words;
}

RectSet Engine::active_region() const {
  const PageLayout& page = pages_[state_.page_index];
  return aoi_for_phrase(page, seg_.phrases[state_.phrase_index], cfg_.aoi);
}

RectSet Engine::lookahead_region() const {
  const PageLayout& page = pages_[state_.page_index];
  RectSet region = gary::lookahead_region(page, seg_, state_.phrase_index, cfg_.aoi);
  // Right after a page turn the reader has to find the new page: any fixation
  // on its first line grants the permit for the first phrase.
  const bool settling = state_.phrase_index == page.phrases.first && state_.clock_ms <= state_.settle_until_ms;
  if (settling && !page.lines.empty() && !page.lines.front().words.empty()) {
    const auto& first_line = page.lines.front().words;
    const RectSet line =
        word_union_boxes(page, {first_line.front().word, first_line.back().word});
    for (const Rect& r : line) region.push_back(r.expanded(cfg_.aoi.pad(page.line_height_px)));
  }
  return region;
}

FixationRegion Engine::classify(Point p) const {
  if (hit_test(p, lookahead_region())) return FixationRegion::Lookahead;
  if (hit_test(p, active_region())) return FixationRegion::Active;
  return FixationRegion::Off;
}

// ---------------------------------------------------------------------------

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t Engine::state_hash() const {
  std::string bytes;
  const auto put_u64 = [&](std::uint64_t v) {
    for (int k = 0; k < 8; ++k) bytes.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  };
  const auto put_f64 = [&](double v) { put_u64(std::bit_cast<std::uint64_t>(v)); };
  put_u64(static_cast<std::uint64_t>(state_.mode));
  put_u64(state_.page_index);
  put_u64(state_.phrase_index);
  put_u64(static_cast<std::uint64_t>(state_.playback));
  put_u64(static_cast<std::uint64_t>(state_.pause_reason));
  put_f64(state_.playback == Playback::Playing ? state_.anchor_ms : 0.0);
  put_f64(state_.paused_elapsed_ms);
  put_u64(state_.advance_permit ? 1 : 0);
  put_f64(state_.last_on_text_ms);
  put_f64(state_.clock_ms);
  put_f64(state_.settle_until_ms);
  return fnv1a(bytes);
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const EngineEvent& e) {
  nlohmann::json payload;
  switch (e.kind) {
    case EventKind::PhraseStart:
    case EventKind::PhraseEnd:
    case EventKind::Resume:
    case EventKind::Finish:
      payload = {{"phrase", e.phrase}};
      break;
    case EventKind::Pause:
      payload = {{"phrase", e.phrase}, {"reason", to_string(e.reason)}, {"elapsed_ms", e.elapsed_ms}};
      break;
    case EventKind::PageTurn:
      payload = {{"page", e.page}};
      break;
    case EventKind::ControlApplied:
      payload = {{"action", to_string(e.action)}, {"outcome", to_string(e.outcome)}};
      break;
    case EventKind::FixationIn:
      payload = {{"region", to_string(e.region)}, {"ignored", e.ignored}, {"fixation", e.fixation}};
      break;
    case EventKind::LayoutUpdate: {
      nlohmann::json boxes = nlohmann::json::array();
      for (const WordBox& wb : e.boxes) {
        boxes.push_back({{"word", wb.word}, {"x", wb.box.x}, {"y", wb.box.y}, {"w", wb.box.w}, {"h", wb.box.h}});
      }
      payload = {{"page", e.page}, {"boxes", std::move(boxes)}};
      break;
    }
  }
  j = {{"t_ms", e.t_ms}, {"kind", to_string(e.kind)}, {"payload", std::move(payload)}};
}

void from_json(const nlohmann::json& j, EngineEvent& e) {
  e = EngineEvent{};
  e.t_ms = j.at("t_ms").get<double>();
  e.kind = parse_enum(j.at("kind").get<std::string>(), kKinds, "event kind");
  const nlohmann::json& p = j.at("payload");
  switch (e.kind) {
    case EventKind::PhraseStart:
    case EventKind::PhraseEnd:
    case EventKind::Resume:
    case EventKind::Finish:
      e.phrase = p.at("phrase").get<std::size_t>();
      break;
    case EventKind::Pause:
      e.phrase = p.at("phrase").get<std::size_t>();
      e.reason = parse_enum(p.at("reason").get<std::string>(), kReasons, "pause reason");
      e.elapsed_ms = p.at("elapsed_ms").get<double>();
      break;
    case EventKind::PageTurn:
      e.page = p.at("page").get<std::size_t>();
      break;
    case EventKind::ControlApplied:
      e.action = parse_control(p.at("action").get<std::string>());
      e.outcome = parse_enum(p.at("outcome").get<std::string>(), kOutcomes, "control outcome");
      break;
    case EventKind::FixationIn:
      e.region = parse_enum(p.at("region").get<std::string>(), kRegions, "fixation region");
      e.ignored = p.at("ignored").get<bool>();
      e.fixation = p.at("fixation").get<Fixation>();
      break;
    case EventKind::LayoutUpdate:
      e.page = p.at("page").get<std::size_t>();
      for (const auto& b : p.at("boxes")) {
        e.boxes.push_back({b.at("word").get<std::size_t>(), b.get<Rect>()});
      }
      break;
  }
}

void to_json(nlohmann::json& j, const SessionConfig& cfg) {
  j = {{"mode", to_string(cfg.mode)},
       {"audio_rate", cfg.audio_rate},
       {"grace_ms", cfg.grace_ms},
       {"page_settle_ms", cfg.page_settle_ms},
       {"aoi", cfg.aoi}};
}

void from_json(const nlohmann::json& j, SessionConfig& cfg) {
  cfg = SessionConfig{};
  cfg.mode = parse_mode(j.at("mode").get<std::string>());
  cfg.audio_rate = j.value("audio_rate", cfg.audio_rate);
  cfg.grace_ms = j.value("grace_ms", cfg.grace_ms);
  cfg.page_settle_ms = j.value("page_settle_ms", cfg.page_settle_ms);
  if (j.contains("aoi")) cfg.aoi = j.at("aoi").get<AoiConfig>();
  if (!(cfg.audio_rate > 0)) throw Error(ErrorCode::NonPositiveRate, "audio rate must be positive");
  if (!(cfg.grace_ms >= 0)) throw Error(ErrorCode::InvalidArgument, "grace_ms must be non-negative");
}

}  // namespace gary
