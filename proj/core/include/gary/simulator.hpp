#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gary/engine.hpp"
#include "gary/gaze.hpp"
#include "gary/layout.hpp"
#include "gary/random.hpp"

namespace gary {

/// Parameters of a synthetic reader.
struct ReaderProfile {
  std::string name;
  double pace_syll_s = 3.0;      // intrinsic silent-reading pace
  double fixation_ms_mean = 250.0;
  double fixation_ms_sd = 70.0;
  double regression_prob = 0.0;  // per fixation
  double off_text_prob = 0.0;    // per fixation
  double off_text_ms = 800.0;
  int decoding_errors = 0;       // word-list reading errors, classification only
  std::uint64_t seed = 1;
};

std::vector<std::string> preset_names();
/// Throws UnknownPreset.
ReaderProfile make_profile(std::string_view preset);

void to_json(nlohmann::json& j, const ReaderProfile& p);
void from_json(const nlohmann::json& j, ReaderProfile& p);

/// Accepts either `{"profiles": [...]}` or a bare array. Entries are profile
/// objects or preset names.
std::vector<ReaderProfile> load_profiles(const nlohmann::json& j);

/// Low-cost tracker model: samples at `rate_hz`, adds isotropic Gaussian noise
/// in screen space and reports through a fixed affine device distortion.
struct TrackerModel {
  double rate_hz = 60.0;
  double noise_px = 5.0;
  double scale_x = 0.92;
  double scale_y = 0.95;
  double offset_x = -24.0;
  double offset_y = 18.0;

  double period_ms() const { return 1000.0 / rate_hz; }
  Point to_device(Point screen) const { return {scale_x * screen.x + offset_x, scale_y * screen.y + offset_y}; }
};

struct ReadingCursor {
  std::size_t word = 0;
  double syllables_done = 0.0;  // progress into `word`
};

inline constexpr double kMinReadingFixationMs = 120.0;

/// Closed-loop reader. Each call to step() advances the reader to `now_ms`
/// given what the engine currently shows and returns one raw tracker sample.
///
/// The cursor moves at the profile's pace while the reader fixates text and
/// never runs further than `lookahead_words` past the highlighted phrase. In
/// GARY mode the reader looks at the first word of the next phrase once the
/// cursor reaches the end of the highlight. Regressions target one to three
/// words back without progress; off-text excursions leave the text area for
/// `off_text_ms`.
class SimulatedReader {
 public:
  SimulatedReader(ReaderProfile profile, TrackerModel tracker, Viewport viewport, std::uint64_t seed);

  /// Raw samples for the 12-dot calibration grid, `samples_per_target` each.
  std::vector<CalibrationTarget> calibration_targets(std::size_t samples_per_target = 60);

  RawGazeSample step(const Engine& engine, double now_ms);

  const ReadingCursor& cursor() const { return cursor_; }
  const ReaderProfile& profile() const { return profile_; }

 private:
  enum class Activity { Read, Preview, Regression, OffText, Wait };

  struct Gaze {
    Activity activity = Activity::Wait;
    Point target;
    double end_ms = 0.0;
  };

  void progress(const Engine& engine, double dt_ms);
  void follow_engine(const Engine& engine, double now_ms);
  void choose_fixation(const Engine& engine, double now_ms);
  std::size_t cap(const Engine& engine) const;
  bool cursor_done(const Engine& engine) const;
  double draw_duration();
  Point word_center(const Engine& engine, std::size_t word) const;

  ReaderProfile profile_;
  TrackerModel tracker_;
  Viewport viewport_;
  Rng rng_;
  ReadingCursor cursor_;
  Gaze gaze_;
  double last_ms_ = 0.0;
  bool started_ = false;
};

}  // namespace gary
