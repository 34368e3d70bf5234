#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gary/gaze.hpp"
#include "gary/layout.hpp"
#include "gary/text_model.hpp"

namespace gary {

enum class Mode { Gary, Traditional };
enum class Playback { Playing, Paused, Finished };
enum class PauseReason { NotStarted, NoPermit, GazeAway, Control };
enum class Control { Play, Pause, SkipForward, SkipBackward };
enum class ControlOutcome { Applied, NoOp };
enum class FixationRegion { Lookahead, Active, Off };
enum class EventKind {
  PhraseStart,
  PhraseEnd,
  Pause,
  Resume,
  PageTurn,
  ControlApplied,
  FixationIn,
  Finish,
  LayoutUpdate,
};

std::string_view to_string(Mode m);
std::string_view to_string(Playback p);
std::string_view to_string(PauseReason r);
std::string_view to_string(Control c);
std::string_view to_string(ControlOutcome o);
std::string_view to_string(FixationRegion r);
std::string_view to_string(EventKind k);

Mode parse_mode(std::string_view s);
Control parse_control(std::string_view s);

inline constexpr double kDefaultAudioRate = 3.1;  // syll/s, 92.5 words per minute
inline constexpr double kDefaultGraceMs = 500.0;
inline constexpr double kDefaultPageSettleMs = 1500.0;

struct SessionConfig {
  Mode mode = Mode::Gary;
  double audio_rate = kDefaultAudioRate;
  double grace_ms = kDefaultGraceMs;
  double page_settle_ms = kDefaultPageSettleMs;
  AoiConfig aoi;
};

struct AudioTimeline {
  std::vector<double> duration_ms;
  std::vector<double> start_ms;
  double total_ms = 0.0;
};

/// duration(i) = 1000 * syllables(i) / audio_rate
AudioTimeline build_timeline(const SegmentedText& seg, double audio_rate);

struct EngineState {
  Mode mode = Mode::Gary;
  std::size_t page_index = 0;
  std::size_t phrase_index = 0;
  Playback playback = Playback::Paused;
  PauseReason pause_reason = PauseReason::NotStarted;
  // While Playing the elapsed time is derived from the anchor so that the
  // state does not depend on how finely the clock was ticked.
  double anchor_ms = 0.0;
  double paused_elapsed_ms = 0.0;
  bool advance_permit = false;
  double last_on_text_ms = 0.0;
  double clock_ms = 0.0;
  double settle_until_ms = -std::numeric_limits<double>::infinity();

  double elapsed_ms() const {
    return playback == Playback::Playing ? clock_ms - anchor_ms : paused_elapsed_ms;
  }
  bool started() const { return !(playback == Playback::Paused && pause_reason == PauseReason::NotStarted); }
};

/// One record of the append-only session log. Only the fields relevant to
/// `kind` are meaningful.
struct EngineEvent {
  double t_ms = 0.0;
  EventKind kind = EventKind::PhraseStart;
  std::size_t phrase = 0;
  std::size_t page = 0;
  PauseReason reason = PauseReason::NoPermit;
  double elapsed_ms = 0.0;
  Control action = Control::Play;
  ControlOutcome outcome = ControlOutcome::Applied;
  FixationRegion region = FixationRegion::Off;
  bool ignored = false;
  Fixation fixation;
  std::vector<WordBox> boxes;

  /// Inputs are the records a replay feeds back into a fresh engine.
  bool is_input() const {
    return kind == EventKind::FixationIn || kind == EventKind::ControlApplied || kind == EventKind::LayoutUpdate;
  }
};

void to_json(nlohmann::json& j, const EngineEvent& e);
void from_json(const nlohmann::json& j, EngineEvent& e);
void to_json(nlohmann::json& j, const SessionConfig& cfg);
void from_json(const nlohmann::json& j, SessionConfig& cfg);

/// The pacing state machine. Both conditions share it: Traditional plays at a
/// fixed rate under transport controls; GARY only moves past a phrase once a
/// fixation has landed in the look-ahead region and pauses when gaze has been
/// off the active and look-ahead areas for longer than the grace period.
///
/// Every input carries the caller's clock; the engine first plays time forward
/// to it, emitting phrase boundaries and pauses at their exact instants.
class Engine {
 public:
  Engine(SegmentedText seg, std::vector<PageLayout> pages, SessionConfig cfg);

  std::vector<EngineEvent> tick(double now_ms);
  std::vector<EngineEvent> fixation(const Fixation& f, double now_ms);
  std::vector<EngineEvent> control(Control action, double now_ms);
  /// Replaces the word boxes of a page with measured geometry.
  std::vector<EngineEvent> update_layout(std::size_t page_index, std::span<const WordBox> boxes, double now_ms);

  const EngineState& state() const { return state_; }
  const std::vector<EngineEvent>& log() const { return log_; }
  const SessionConfig& config() const { return cfg_; }
  const SegmentedText& text() const { return seg_; }
  const std::vector<PageLayout>& pages() const { return pages_; }
  const AudioTimeline& timeline() const { return timeline_; }
  std::size_t page_of(std::size_t phrase) const { return phrase_page_[phrase]; }

  /// Word span of the active phrase. Throws SessionFinished.
  WordRange current_highlight() const;

  RectSet active_region() const;
  /// Look-ahead region in force right now, including the page-settle window.
  RectSet lookahead_region() const;
  FixationRegion classify(Point p) const;

  /// FNV-1a over a canonical encoding of the state.
  std::uint64_t state_hash() const;

 private:
  void play_until(double now_ms, std::vector<EngineEvent>& out);
  void complete_phrase(double t, std::vector<EngineEvent>& out);
  void move_to(std::size_t phrase, double t, bool natural, std::vector<EngineEvent>& out);
  void resume(double t, std::vector<EngineEvent>& out);
  void emit(EngineEvent e, std::vector<EngineEvent>& out);
  EngineEvent make(EventKind kind, double t) const;

  SegmentedText seg_;
  std::vector<PageLayout> pages_;
  SessionConfig cfg_;
  AudioTimeline timeline_;
  std::vector<std::size_t> phrase_page_;
  EngineState state_;
  std::vector<EngineEvent> log_;
};

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace gary
