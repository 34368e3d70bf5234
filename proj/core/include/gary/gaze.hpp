#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gary/geometry.hpp"

namespace gary {

/// One sample as reported by the tracker, in device coordinates.
struct RawGazeSample {
  double t_ms = 0.0;
  double x = 0.0;
  double y = 0.0;
  bool valid = true;
  friend bool operator==(const RawGazeSample&, const RawGazeSample&) = default;
};

/// A calibrated sample in screen pixels.
struct ScreenSample {
  double t_ms = 0.0;
  Point pos;
  bool valid = true;
};

inline constexpr std::size_t kCalibrationTargets = 12;
inline constexpr std::size_t kMinSamplesPerTarget = 5;

struct CalibrationTarget {
  Point target;
  std::vector<RawGazeSample> samples;
};

/// Second-order polynomial mapping, one set of coefficients per axis:
///   out = c0 + c1*x + c2*y + c3*x^2 + c4*y^2 + c5*x*y
struct CalibrationModel {
  std::array<double, 6> x_coeffs{0, 1, 0, 0, 0, 0};
  std::array<double, 6> y_coeffs{0, 0, 1, 0, 0, 0};
  double rms_error_px = 0.0;  // per axis
  double screen_width_px = 1024.0;
  double screen_height_px = 768.0;

  static CalibrationModel identity(double screen_width_px, double screen_height_px);
  Point map(double x, double y) const;
};

/// The 4x3 dot grid shown during calibration, inset by 10% of each dimension.
std::vector<Point> calibration_grid(double screen_width_px, double screen_height_px);

/// Least-squares fit over every valid sample of every target. Needs exactly 12
/// targets with at least 5 valid samples each; non-collinear targets.
CalibrationModel fit_calibration(std::span<const CalibrationTarget> targets,
                                 double screen_width_px, double screen_height_px);

/// nullopt when the sample is invalid or maps outside the viewport scaled 2x
/// about its centre.
std::optional<Point> apply_calibration(const CalibrationModel& model, const RawGazeSample& s);

ScreenSample calibrate_sample(const CalibrationModel& model, const RawGazeSample& s);

struct Fixation {
  double start_ms = 0.0;
  double duration_ms = 0.0;
  Point centroid;

  double end_ms() const { return start_ms + duration_ms; }
  friend bool operator==(const Fixation&, const Fixation&) = default;
};

/// I-DT thresholds. Dispersion is bounding-box width + height.
struct FixationParams {
  double dispersion_px = 60.0;
  double min_duration_ms = 80.0;
};

/// Dispersion-threshold identification over a complete stream. Windows are
/// grown from the left; a window that breaks the dispersion limit is emitted if
/// it spans at least min_duration_ms, otherwise its first sample is dropped.
/// Invalid samples end the current window.
std::vector<Fixation> detect_fixations(std::span<const ScreenSample> stream, const FixationParams& params);

/// Online variant of detect_fixations for live gating. Besides the closed
/// fixations (identical to the batch result) it reports an ongoing fixation as
/// soon as it qualifies and then every `refresh_ms` while it lasts.
class FixationStream {
 public:
  enum class Phase { Onset, Ongoing, Closed };

  struct Report {
    Phase phase;
    Fixation fixation;
  };

  explicit FixationStream(FixationParams params = {}, double refresh_ms = 100.0);

  std::vector<Report> push(const ScreenSample& s);
  /// Closes the pending window at end of stream.
  std::vector<Report> finish();

 private:
  struct Entry {
    double t_ms;
    Point pos;
  };

  double dispersion() const;
  Fixation current(std::size_t count) const;
  void reset();
  void close_into(std::vector<Report>& out, std::size_t count);
  void pop_front();

  FixationParams params_;
  double refresh_ms_;
  std::deque<Entry> window_;
  // Monotonic deques of window indices (absolute counters) for sliding min/max.
  std::deque<std::size_t> min_x_, max_x_, min_y_, max_y_;
  std::size_t head_ = 0;  // absolute index of window_.front()
  double sum_x_ = 0.0;
  double sum_y_ = 0.0;
  bool qualified_ = false;
  double last_report_ms_ = 0.0;
  std::optional<double> last_t_;
};

void to_json(nlohmann::json& j, const CalibrationModel& m);
void from_json(const nlohmann::json& j, CalibrationModel& m);
void to_json(nlohmann::json& j, const Fixation& f);
void from_json(const nlohmann::json& j, Fixation& f);

/// Gaze trace CSV: header `t_ms,x,y,valid`, one sample per row.
void write_gaze_csv(std::ostream& out, std::span<const RawGazeSample> samples);
std::vector<RawGazeSample> read_gaze_csv(std::istream& in);

}  // namespace gary
