#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gary/engine.hpp"
#include "gary/gaze.hpp"
#include "gary/layout.hpp"
#include "gary/session_file.hpp"
#include "gary/simulator.hpp"
#include "gary/text_model.hpp"

namespace gary {

/// A text prepared for presentation: segmentation plus pagination.
struct Material {
  SegmentedText seg;
  std::vector<PageLayout> pages;
  Viewport viewport;
  int max_words = kMaxPhraseWords;
};

Material prepare_material(std::string_view raw_text, std::string id, std::string title,
                          const Viewport& vp = {}, int max_words = kMaxPhraseWords);

/// Reads a UTF-8 text file. A short first line followed by a blank line is
/// taken as the title; the id is the file stem.
Material load_material(const std::string& path, const Viewport& vp = {}, int max_words = kMaxPhraseWords);

struct SessionMetrics {
  double total_time_s = 0.0;
  double effective_speed_syll_s = 0.0;
  int pause_count = 0;
  double pause_time_s = 0.0;
  double synchrony = 0.0;  // share of playing time with the latest fixation on active or look-ahead text
  double coverage = 0.0;   // share of phrases whose AOI received a fixation
  bool finished = false;
};

void to_json(nlohmann::json& j, const SessionMetrics& m);

/// Metrics of an engine log. Timing runs from the first applied Play to Finish
/// (or to the engine clock when the session did not finish).
SessionMetrics compute_metrics(const Engine& engine);

struct RunOptions {
  SessionConfig engine;  // mode is overridden by run_session's argument
  FixationParams fixation;
  double refresh_ms = 100.0;
  TrackerModel tracker;
  std::size_t calibration_samples = 60;
  double timeout_factor = 10.0;
  bool record_gaze = false;
};

struct SessionRun {
  SessionMetrics metrics;
  SessionHeader header;
  Engine engine;
  CalibrationModel calibration;
  std::vector<RawGazeSample> gaze;  // filled when RunOptions::record_gaze

  std::string session_file() const { return serialize_session(header, engine); }
};

/// Session seed shared by both conditions of one participant.
std::uint64_t session_seed(const ReaderProfile& profile, std::uint64_t seed);

/// Calibrates a simulated tracker, then lock-steps reader, fixation detector
/// and engine on a 60 Hz clock until Finish. Throws Timeout past
/// `timeout_factor` times the audio timeline.
SessionRun run_session(const ReaderProfile& profile, const Material& text, Mode mode, std::uint64_t seed,
                       const RunOptions& opts = {});

enum class Level { High, Low };
std::string_view to_string(Level l);

struct ProfileClass {
  Level speed = Level::High;
  Level accuracy = Level::High;
  friend bool operator==(const ProfileClass&, const ProfileClass&) = default;
};

inline constexpr double kLowSpeedCutoff = 1.7;  // syll/s
inline constexpr int kLowAccuracyCutoff = 10;   // errors

/// Low speed iff speed < 1.7, low accuracy iff errors > 10.
ProfileClass classify_profile(double speed_syll_s, int errors);

inline double gain_score(double value_gary, double value_trad) { return value_gary - value_trad; }

// ---------------------------------------------------------------------------

struct CrossoverOptions {
  std::vector<std::uint64_t> seeds{1};
  RunOptions run;
  // Per-slot technology. Normally GARY and Traditional; overriding one of them
  // gives a single-technology control run.
  Mode first_condition = Mode::Gary;
  Mode second_condition = Mode::Traditional;
};

/// One participant of the crossover: a profile under one seed.
struct Assignment {
  std::size_t participant = 0;
  std::size_t profile = 0;
  std::uint64_t seed = 0;
  bool condition_a_first = true;  // the "GARY" slot is read first
  bool condition_a_on_text_a = true;
};

/// Full 2x2 counterbalancing over participants in (seed, profile) order:
/// participant k falls in cell k % 4 of order x text pairing.
std::vector<Assignment> assign_crossover(std::size_t n_profiles, std::span<const std::uint64_t> seeds);

struct SessionRow {
  std::string profile;
  ProfileClass klass;
  std::size_t participant = 0;
  std::uint64_t seed = 0;
  std::string condition;  // "gary" or "traditional" slot label
  Mode mode = Mode::Gary;
  int order = 1;          // 1 = read first
  std::string text_id;
  SessionMetrics metrics;
};

struct Aggregate {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample SD, 0 when n < 2
};

Aggregate aggregate(std::span<const double> values);

struct CrossoverReport {
  std::vector<SessionRow> rows;
  std::vector<Assignment> assignments;

  std::string csv() const;
  nlohmann::json summary() const;
};

/// Throws InvalidArgument with fewer than two profiles or no seeds.
CrossoverReport run_crossover(std::span<const ReaderProfile> profiles, const Material& text_a,
                              const Material& text_b, const CrossoverOptions& opts = {});

/// Gain of the "gary" slot over the "traditional" slot per participant and metric.
struct GainScore {
  std::string metric;
  double delta = 0.0;
};

std::vector<GainScore> participant_gains(const CrossoverReport& report, std::size_t participant);

/// Bisection on pace until the mean GARY speed over `texts` x `seeds` is within
/// `tolerance` of `target`.
struct PaceFit {
  double pace = 0.0;
  double speed = 0.0;
  int iterations = 0;
};

PaceFit calibrate_pace(ReaderProfile profile, std::span<const Material> texts, double target,
                       std::span<const std::uint64_t> seeds, double tolerance = 0.01,
                       const RunOptions& opts = {});

}  // namespace gary
