#include "gary/simulator.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "gary/error.hpp"

namespace gary {

namespace {

// Paces were tuned so that the mean GARY speed over the two bundled texts
// lands on 2.4 (typical) and 2.2 (dyslexic) syll/s; see `gary calibrate`.
constexpr double kTypicalPace = 2.593;
constexpr double kDyslexicPace = 2.483;

}  // namespace

std::vector<std::string> preset_names() { return {"typical", "dyslexic", "dyslexic_inaccurate"}; }

ReaderProfile make_profile(std::string_view preset) {
  ReaderProfile p;
  p.name = std::string(preset);
  if (preset == "typical") {
    p.pace_syll_s = kTypicalPace;
    p.fixation_ms_mean = 230.0;
    p.fixation_ms_sd = 60.0;
    p.regression_prob = 0.06;
    p.off_text_prob = 0.015;
    p.off_text_ms = 600.0;
    p.decoding_errors = 2;
    p.seed = 1001;
  } else if (preset == "dyslexic") {
    p.pace_syll_s = kDyslexicPace;
    p.fixation_ms_mean = 300.0;
    p.fixation_ms_sd = 90.0;
    p.regression_prob = 0.08;
    p.off_text_prob = 0.02;
    p.off_text_ms = 800.0;
    p.decoding_errors = 7;
    p.seed = 2002;
  } else if (preset == "dyslexic_inaccurate") {
    p.pace_syll_s = kDyslexicPace;
    p.fixation_ms_mean = 300.0;
    p.fixation_ms_sd = 90.0;
    p.regression_prob = 0.18;
    p.off_text_prob = 0.04;
    p.off_text_ms = 900.0;
    p.decoding_errors = 13;
    p.seed = 3003;
  } else {
    throw Error(ErrorCode::UnknownPreset, std::string(preset));
  }
  return p;
}

void to_json(nlohmann::json& j, const ReaderProfile& p) {
  j = {{"name", p.name},
       {"pace_syll_s", p.pace_syll_s},
       {"fixation_ms_mean", p.fixation_ms_mean},
       {"fixation_ms_sd", p.fixation_ms_sd},
       {"regression_prob", p.regression_prob},
       {"off_text_prob", p.off_text_prob},
       {"off_text_ms", p.off_text_ms},
       {"decoding_errors", p.decoding_errors},
       {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, ReaderProfile& p) {
  // A "preset" key seeds the defaults, explicit fields override.
  if (j.contains("preset")) {
    p = make_profile(j.at("preset").get<std::string>());
  }
  p.name = j.value("name", p.name);
  p.pace_syll_s = j.value("pace_syll_s", p.pace_syll_s);
  p.fixation_ms_mean = j.value("fixation_ms_mean", p.fixation_ms_mean);
  p.fixation_ms_sd = j.value("fixation_ms_sd", p.fixation_ms_sd);
  p.regression_prob = j.value("regression_prob", p.regression_prob);
  p.off_text_prob = j.value("off_text_prob", p.off_text_prob);
  p.off_text_ms = j.value("off_text_ms", p.off_text_ms);
  p.decoding_errors = j.value("decoding_errors", p.decoding_errors);
  p.seed = j.value("seed", p.seed);

  if (!(p.pace_syll_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "pace_syll_s must be positive");
  if (!(p.fixation_ms_mean > 0.0) || p.fixation_ms_sd < 0.0)
    throw Error(ErrorCode::InvalidArgument, "bad fixation duration distribution");
  auto prob = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!prob(p.regression_prob) || !prob(p.off_text_prob) || p.regression_prob + p.off_text_prob > 1.0)
    throw Error(ErrorCode::InvalidArgument, "probabilities out of range");
  if (p.off_text_ms < 0.0) throw Error(ErrorCode::InvalidArgument, "off_text_ms must be non-negative");
}

std::vector<ReaderProfile> load_profiles(const nlohmann::json& j) {
  const nlohmann::json& list = j.is_object() && j.contains("profiles") ? j.at("profiles") : j;
  if (!list.is_array()) throw Error(ErrorCode::InvalidArgument, "profiles must be an array");
  std::vector<ReaderProfile> out;
  for (const auto& item : list) {
    if (item.is_string()) {
      out.push_back(make_profile(item.get<std::string>()));
    } else {
      out.push_back(item.get<ReaderProfile>());
    }
  }
  return out;
}

SimulatedReader::SimulatedReader(ReaderProfile profile, TrackerModel tracker, Viewport viewport,
                                 std::uint64_t seed)
    : profile_(std::move(profile)), tracker_(tracker), viewport_(viewport), rng_(seed) {}

std::vector<CalibrationTarget> SimulatedReader::calibration_targets(std::size_t samples_per_target) {
  std::vector<CalibrationTarget> out;
  double t = 0.0;
  for (Point p : calibration_grid(viewport_.width_px, viewport_.height_px)) {
    CalibrationTarget target{p, {}};
    for (std::size_t i = 0; i < samples_per_target; ++i) {
      const Point noisy{p.x + rng_.normal(0.0, tracker_.noise_px), p.y + rng_.normal(0.0, tracker_.noise_px)};
      const Point d = tracker_.to_device(noisy);
      target.samples.push_back({t, d.x, d.y, true});
      t += tracker_.period_ms();
    }
    out.push_back(std::move(target));
  }
  return out;
}

std::size_t SimulatedReader::cap(const Engine& engine) const {
  const EngineState& s = engine.state();
  const PageLayout& page = engine.pages()[s.page_index];
  if (s.playback == Playback::Finished) return page.words.last;
  const WordRange hl = engine.current_highlight();
  return std::min(page.words.last, hl.last + static_cast<std::size_t>(engine.config().aoi.lookahead_words));
}

bool SimulatedReader::cursor_done(const Engine& engine) const {
  return cursor_.word == cap(engine) &&
         cursor_.syllables_done >= engine.text().word_syllables[cursor_.word];
}

void SimulatedReader::progress(const Engine& engine, double dt_ms) {
  const std::size_t limit = cap(engine);
  const auto& syl = engine.text().word_syllables;
  cursor_.syllables_done += dt_ms * profile_.pace_syll_s / 1000.0;
  while (cursor_.syllables_done >= syl[cursor_.word] && cursor_.word < limit) {
    cursor_.syllables_done -= syl[cursor_.word];
    ++cursor_.word;
  }
  if (cursor_.word == limit) cursor_.syllables_done = std::min<double>(cursor_.syllables_done, syl[cursor_.word]);
}

void SimulatedReader::follow_engine(const Engine& engine, double now_ms) {
  const PageLayout& page = engine.pages()[engine.state().page_index];
  if (!page.has_word(cursor_.word)) {
    // The page changed under the reader: start at its top.
    cursor_ = {page.words.first, 0.0};
    gaze_.end_ms = now_ms;
    return;
  }
  const std::size_t limit = cap(engine);
  if (cursor_.word > limit) {
    cursor_ = {limit, 0.0};
    gaze_.end_ms = now_ms;
  }
}

double SimulatedReader::draw_duration() {
  const double lo = kMinReadingFixationMs;
  const double hi = std::max(lo, profile_.fixation_ms_mean + 3.0 * profile_.fixation_ms_sd);
  for (int i = 0; i < 64; ++i) {
    const double d = rng_.normal(profile_.fixation_ms_mean, profile_.fixation_ms_sd);
    if (d >= lo && d <= hi) return d;
  }
  return std::clamp(profile_.fixation_ms_mean, lo, hi);
}

Point SimulatedReader::word_center(const Engine& engine, std::size_t word) const {
  const PageLayout& page = engine.pages()[engine.state().page_index];
  if (auto loc = page.locate(word)) return loc->second.center();
  return {viewport_.width_px / 2.0, viewport_.height_px / 2.0};
}

void SimulatedReader::choose_fixation(const Engine& engine, double now_ms) {
  const EngineState& s = engine.state();
  const PageLayout& page = engine.pages()[s.page_index];
  const auto& syl = engine.text().word_syllables;

  const double u = rng_.uniform();
  if (u < profile_.off_text_prob) {
    gaze_ = {Activity::OffText, {viewport_.width_px / 2.0, viewport_.height_px + 150.0},
             now_ms + std::max(profile_.off_text_ms, kMinReadingFixationMs)};
    return;
  }
  if (u < profile_.off_text_prob + profile_.regression_prob && cursor_.word > page.words.first) {
    const std::size_t back = 1 + rng_.below(3);
    const std::size_t w = cursor_.word - std::min(back, cursor_.word - page.words.first);
    gaze_ = {Activity::Regression, word_center(engine, w), now_ms + draw_duration()};
    return;
  }

  std::size_t target = cursor_.word;
  if (s.mode == Mode::Gary && s.playback != Playback::Finished) {
    const WordRange hl = engine.current_highlight();
    if (cursor_.word < hl.first) {
      target = hl.first;
    } else if (cursor_.word == hl.last && cursor_.word + 1 <= page.words.last) {
      target = cursor_.word + 1;
    }
  }

  const double drawn = draw_duration();
  if (cursor_done(engine)) {
    gaze_ = {Activity::Wait, word_center(engine, target), now_ms + drawn};
    return;
  }
  const double left_ms = (syl[cursor_.word] - cursor_.syllables_done) * 1000.0 / profile_.pace_syll_s;
  const double dur = std::max(kMinReadingFixationMs, std::min(drawn, left_ms));
  gaze_ = {target == cursor_.word ? Activity::Read : Activity::Preview, word_center(engine, target), now_ms + dur};
}

RawGazeSample SimulatedReader::step(const Engine& engine, double now_ms) {
  if (!started_) {
    started_ = true;
    last_ms_ = now_ms;
    cursor_ = {engine.pages()[engine.state().page_index].words.first, 0.0};
    gaze_.end_ms = now_ms;
  }
  const double dt = std::max(0.0, now_ms - last_ms_);
  last_ms_ = now_ms;

  follow_engine(engine, now_ms);
  if (gaze_.activity == Activity::Read || gaze_.activity == Activity::Preview) progress(engine, dt);
  if (now_ms >= gaze_.end_ms) choose_fixation(engine, now_ms);

  const Point noisy{gaze_.target.x + rng_.normal(0.0, tracker_.noise_px),
                    gaze_.target.y + rng_.normal(0.0, tracker_.noise_px)};
  const Point d = tracker_.to_device(noisy);
  return {now_ms, d.x, d.y, true};
}

}  // namespace gary
