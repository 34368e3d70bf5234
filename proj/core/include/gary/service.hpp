#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "gary/engine.hpp"
#include "gary/error.hpp"
#include "gary/gaze.hpp"
#include "gary/harness.hpp"
#include "gary/session_file.hpp"

namespace gary {

inline constexpr int kProtocolVersion = 1;

struct ServiceOptions {
  SessionConfig session;
  FixationParams fixation;
  double refresh_ms = 100.0;
  double tick_hz = 60.0;
};

/// One live engine session behind the wire protocol. Transport-agnostic: the
/// transport feeds frames with their arrival time on the server clock and
/// calls tick() at `tick_hz`; every call returns the frames to send back.
///
/// Server to client: hello, page, state (gap-free `seq`), metrics, error.
/// Client to server: gaze {t_ms, x, y[, valid]}, control {action},
/// page {page_index, boxes} with measured word boxes.
///
/// Gaze arrives in screen pixels (the UI's pointer stands in for a tracker),
/// so the calibration is the identity. Client `t_ms` must increase strictly;
/// the engine is driven by the arrival time instead.
class SessionService {
 public:
  struct Output {
    std::vector<nlohmann::json> frames;
    bool close = false;
  };

  SessionService(std::string session_id, const Material& text, ServiceOptions opts);

  /// hello + page + state.
  Output open(double now_ms);
  Output handle(std::string_view frame, double arrival_ms);
  Output tick(double now_ms);

  const Engine& engine() const { return engine_; }
  const std::string& session_id() const { return header_.session_id; }
  std::string session_file() const { return serialize_session(header_, engine_); }
  bool finished() const { return engine_.state().playback == Playback::Finished; }
  /// The server clock the last input was applied at.
  double clock_ms() const { return clock_ms_; }

 private:
  double server_time(double arrival_ms);
  void push_changes(Output& out);
  nlohmann::json frame(std::string_view type, nlohmann::json payload) const;
  nlohmann::json page_frame() const;
  nlohmann::json state_frame();
  Output fail(ErrorCode code, std::string message, bool close);

  SessionHeader header_;
  ServiceOptions opts_;
  Engine engine_;
  CalibrationModel calibration_;
  FixationStream detector_;
  double clock_ms_ = 0.0;
  std::optional<double> last_gaze_ms_;
  std::optional<double> last_client_t_;
  std::uint64_t seq_ = 0;
  std::optional<std::tuple<std::size_t, std::size_t, Playback, PauseReason>> sent_state_;
  std::optional<std::size_t> sent_page_;
  bool sent_metrics_ = false;
  bool closed_ = false;
};

/// Writes the session file to `$GARY_LOG_DIR/<session_id>.jsonl` when the
/// variable is set. Returns the path written, if any.
std::optional<std::string> save_session_log(const SessionService& service);

}  // namespace gary
