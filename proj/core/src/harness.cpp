#include "gary/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

#include "gary/error.hpp"

namespace gary {

Material prepare_material(std::string_view raw_text, std::string id, std::string title, const Viewport& vp,
                          int max_words) {
  Material m;
  m.seg = segment_phrases(tokenize(raw_text, std::move(id), std::move(title)), max_words);
  m.pages = paginate(m.seg, vp);
  m.viewport = vp;
  m.max_words = max_words;
  return m;
}

Material load_material(const std::string& path, const Viewport& vp, int max_words) {
  const std::string content = read_text_file(path);
  std::string title;
  std::string_view body = content;
  const auto nl = body.find('\n');
  if (nl != std::string_view::npos && nl < 80) {
    std::size_t next = nl + 1;
    if (next < body.size() && body[next] == '\r') ++next;
    if (next < body.size() && body[next] == '\n') {
      title = std::string(body.substr(0, nl));
      if (!title.empty() && title.back() == '\r') title.pop_back();
      body.remove_prefix(next + 1);
    }
  }
  return prepare_material(body, std::filesystem::path(path).stem().string(), title, vp, max_words);
}

void to_json(nlohmann::json& j, const SessionMetrics& m) {
  j = {{"total_time_s", m.total_time_s},
       {"effective_speed_syll_s", m.effective_speed_syll_s},
       {"pause_count", m.pause_count},
       {"pause_time_s", m.pause_time_s},
       {"synchrony", m.synchrony},
       {"coverage", m.coverage},
       {"finished", m.finished}};
}

SessionMetrics compute_metrics(const Engine& engine) {
  const SegmentedText& seg = engine.text();
  const auto& pages = engine.pages();
  const AoiConfig& aoi = engine.config().aoi;
  const auto& log = engine.log();

  // Regions per phrase are fixed for a given layout; cache them.
  std::vector<RectSet> active(seg.phrases.size()), ahead(seg.phrases.size());
  for (const Phrase& p : seg.phrases) {
    const PageLayout& page = pages[engine.page_of(p.index)];
    active[p.index] = aoi_for_phrase(page, p, aoi);
    ahead[p.index] = lookahead_region(page, seg, p.index, aoi);
  }

  SessionMetrics m;
  std::optional<double> start, finish;
  bool playing = false;
  std::size_t phrase = 0;
  std::size_t page = engine.page_of(0);
  std::optional<Point> latest;
  double last_t = 0.0;
  double playing_ms = 0.0, synced_ms = 0.0, pause_ms = 0.0;
  std::optional<double> paused_at;
  std::vector<bool> covered(seg.phrases.size(), false);

  auto in_sync = [&] {
    return latest && (hit_test(*latest, active[phrase]) || hit_test(*latest, ahead[phrase]));
  };
  auto advance = [&](double t) {
    if (playing && t > last_t) {
      playing_ms += t - last_t;
      if (in_sync()) synced_ms += t - last_t;
    }
    last_t = std::max(last_t, t);
  };

  for (const EngineEvent& e : log) {
    advance(e.t_ms);
    switch (e.kind) {
      case EventKind::ControlApplied:
        if (e.action == Control::Play && e.outcome == ControlOutcome::Applied) {
          if (!start) start = e.t_ms;
          playing = true;
        }
        break;
      case EventKind::Resume:
        playing = true;
        if (paused_at) {
          pause_ms += e.t_ms - *paused_at;
          paused_at.reset();
        }
        break;
      case EventKind::Pause:
        playing = false;
        ++m.pause_count;
        paused_at = e.t_ms;
        break;
      case EventKind::PhraseStart:
        phrase = e.phrase;
        break;
      case EventKind::PageTurn:
        page = e.page;
        break;
      case EventKind::Finish:
        playing = false;
        finish = e.t_ms;
        break;
      case EventKind::FixationIn: {
        latest = e.fixation.centroid;
        for (std::size_t p = pages[page].phrases.first; p <= pages[page].phrases.last; ++p) {
          if (!covered[p] && hit_test(*latest, active[p])) covered[p] = true;
        }
        break;
      }
      default:
        break;
    }
  }
  const double end = finish.value_or(engine.state().clock_ms);
  advance(end);
  if (paused_at) pause_ms += end - *paused_at;

  m.finished = finish.has_value();
  m.total_time_s = start ? (end - *start) / 1000.0 : 0.0;
  m.effective_speed_syll_s = m.total_time_s > 0.0 ? seg.total_syllables / m.total_time_s : 0.0;
  m.pause_time_s = pause_ms / 1000.0;
  m.synchrony = playing_ms > 0.0 ? synced_ms / playing_ms : 0.0;
  m.coverage = static_cast<double>(std::count(covered.begin(), covered.end(), true)) /
               static_cast<double>(covered.size());
  return m;
}

std::uint64_t session_seed(const ReaderProfile& profile, std::uint64_t seed) {
  return mix_seed(profile.seed ^ mix_seed(seed));
}

SessionRun run_session(const ReaderProfile& profile, const Material& text, Mode mode, std::uint64_t seed,
                       const RunOptions& opts) {
  SimulatedReader reader(profile, opts.tracker, text.viewport, session_seed(profile, seed));
  const auto targets = reader.calibration_targets(opts.calibration_samples);
  const CalibrationModel cal = fit_calibration(targets, text.viewport.width_px, text.viewport.height_px);

  SessionConfig cfg = opts.engine;
  cfg.mode = mode;
  cfg.aoi.expansion_rms_px = cal.rms_error_px;

  SessionHeader header;
  header.session_id = profile.name + "-" + std::string(to_string(mode)) + "-" + std::to_string(seed);
  header.config = cfg;
  header.text_id = text.seg.document.id;
  header.title = text.seg.document.title;
  header.raw_text = text.seg.document.raw_text;
  header.max_words = text.max_words;
  header.viewport = text.viewport;
  header.meta = {{"profile", profile}, {"seed", seed}, {"calibration", cal}};

  SessionRun run{{}, header, Engine(text.seg, text.pages, cfg), cal, {}};
  Engine& engine = run.engine;
  FixationStream detector(opts.fixation, opts.refresh_ms);

  const double limit = opts.timeout_factor * engine.timeline().total_ms;
  engine.control(Control::Play, 0.0);
  for (std::uint64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * 1000.0 / opts.tracker.rate_hz;
    if (t > limit) {
      throw Error(ErrorCode::Timeout, header.session_id + " did not finish within " +
                                          std::to_string(static_cast<long long>(limit)) + " ms");
    }
    engine.tick(t);
    if (engine.state().playback == Playback::Finished) break;
    const RawGazeSample raw = reader.step(engine, t);
    if (opts.record_gaze) run.gaze.push_back(raw);
    for (const auto& r : detector.push(calibrate_sample(cal, raw))) {
      if (r.phase != FixationStream::Phase::Closed) engine.fixation(r.fixation, t);
      if (engine.state().playback == Playback::Finished) break;
    }
    if (engine.state().playback == Playback::Finished) break;
  }
  run.metrics = compute_metrics(engine);
  return run;
}

std::string_view to_string(Level l) { return l == Level::High ? "High" : "Low"; }

ProfileClass classify_profile(double speed_syll_s, int errors) {
  if (!(speed_syll_s > 0.0) || errors < 0) throw Error(ErrorCode::InvalidArgument, "speed > 0 and errors >= 0");
  return {speed_syll_s < kLowSpeedCutoff ? Level::Low : Level::High,
          errors > kLowAccuracyCutoff ? Level::Low : Level::High};
}

// ---------------------------------------------------------------------------

std::vector<Assignment> assign_crossover(std::size_t n_profiles, std::span<const std::uint64_t> seeds) {
  std::vector<Assignment> out;
  std::size_t k = 0;
  for (std::uint64_t seed : seeds) {
    for (std::size_t p = 0; p < n_profiles; ++p, ++k) {
      const std::size_t cell = k % 4;
      out.push_back({k, p, seed, cell == 0 || cell == 1, cell == 0 || cell == 2});
    }
  }
  return out;
}

Aggregate aggregate(std::span<const double> values) {
  Aggregate a;
  a.n = values.size();
  if (a.n == 0) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(a.n);
  if (a.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.sd = std::sqrt(ss / static_cast<double>(a.n - 1));
  }
  return a;
}

namespace {

constexpr const char* kMetricNames[] = {"total_time_s", "effective_speed_syll_s", "pause_count",
                                        "pause_time_s", "synchrony",              "coverage"};

double metric(const SessionMetrics& m, std::string_view name) {
  if (name == "total_time_s") return m.total_time_s;
  if (name == "effective_speed_syll_s") return m.effective_speed_syll_s;
  if (name == "pause_count") return m.pause_count;
  if (name == "pause_time_s") return m.pause_time_s;
  if (name == "synchrony") return m.synchrony;
  return m.coverage;
}

std::string num(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

nlohmann::json agg_json(const Aggregate& a) { return {{"n", a.n}, {"mean", a.mean}, {"sd", a.sd}}; }

}  // namespace

std::string CrossoverReport::csv() const {
  std::string out =
      "participant,profile,speed_class,accuracy_class,seed,condition,mode,order,text,"
      "total_time_s,effective_speed_syll_s,pause_count,pause_time_s,synchrony,coverage,finished\n";
  for (const SessionRow& r : rows) {
    out += std::to_string(r.participant) + ',' + r.profile + ',' + std::string(to_string(r.klass.speed)) + ',' +
           std::string(to_string(r.klass.accuracy)) + ',' + std::to_string(r.seed) + ',' + r.condition + ',' +
           std::string(to_string(r.mode)) + ',' + std::to_string(r.order) + ',' + r.text_id + ',' +
           num(r.metrics.total_time_s) + ',' + num(r.metrics.effective_speed_syll_s) + ',' +
           std::to_string(r.metrics.pause_count) + ',' + num(r.metrics.pause_time_s) + ',' +
           num(r.metrics.synchrony) + ',' + num(r.metrics.coverage) + ',' + (r.metrics.finished ? "1" : "0") +
           '\n';
  }
  return out;
}

std::vector<GainScore> participant_gains(const CrossoverReport& report, std::size_t participant) {
  const SessionRow* g = nullptr;
  const SessionRow* t = nullptr;
  for (const SessionRow& r : report.rows) {
    if (r.participant != participant) continue;
    (r.condition == "gary" ? g : t) = &r;
  }
  if (!g || !t) throw Error(ErrorCode::InvalidArgument, "participant has no complete pair of sessions");
  std::vector<GainScore> out;
  for (const char* name : kMetricNames) {
    out.push_back({name, gain_score(metric(g->metrics, name), metric(t->metrics, name))});
  }
  return out;
}

nlohmann::json CrossoverReport::summary() const {
  nlohmann::json j;
  j["sessions"] = rows.size();
  j["participants"] = assignments.size();
  std::size_t gary_first = 0;
  for (const Assignment& a : assignments) gary_first += a.condition_a_first ? 1 : 0;
  j["started_with_gary"] = gary_first;

  // Cells of the design: condition x order, keyed "<condition>/<first|second>".
  std::map<std::string, std::vector<const SessionRow*>> cells;
  std::map<std::string, std::vector<const SessionRow*>> conditions;
  for (const SessionRow& r : rows) {
    cells[r.condition + (r.order == 1 ? "/first" : "/second")].push_back(&r);
    conditions[r.condition].push_back(&r);
  }
  auto describe = [](const std::vector<const SessionRow*>& group) {
    nlohmann::json c = nlohmann::json::object();
    for (const char* name : kMetricNames) {
      std::vector<double> v;
      for (const SessionRow* r : group) v.push_back(metric(r->metrics, name));
      c[name] = agg_json(aggregate(v));
    }
    return c;
  };
  for (const auto& [key, group] : cells) j["cells"][key] = describe(group);
  for (const auto& [key, group] : conditions) j["conditions"][key] = describe(group);

  // Per-participant gains and their means per profile.
  nlohmann::json gains = nlohmann::json::array();
  std::map<std::string, std::map<std::string, std::vector<double>>> by_profile;
  for (const Assignment& a : assignments) {
    std::string profile;
    for (const SessionRow& r : rows) {
      if (r.participant == a.participant) profile = r.profile;
    }
    nlohmann::json entry = {{"participant", a.participant}, {"profile", profile}, {"seed", a.seed}};
    for (const GainScore& g : participant_gains(*this, a.participant)) {
      entry["delta"][g.metric] = g.delta;
      by_profile[profile][g.metric].push_back(g.delta);
    }
    gains.push_back(std::move(entry));
  }
  j["gains"] = std::move(gains);
  for (const auto& [profile, metrics] : by_profile) {
    for (const auto& [name, values] : metrics) j["profile_gains"][profile][name] = agg_json(aggregate(values));
  }

  // Comprehension is not simulated; the published group gains are carried
  // as fixed reference values only.
  j["reference"] = {{"comprehension_gain_dyslexic", 1.3}, {"comprehension_gain_inaccurate", 1.9}};
  return j;
}

CrossoverReport run_crossover(std::span<const ReaderProfile> profiles, const Material& text_a,
                              const Material& text_b, const CrossoverOptions& opts) {
  if (profiles.size() < 2) throw Error(ErrorCode::InvalidArgument, "crossover needs at least two profiles");
  if (opts.seeds.empty()) throw Error(ErrorCode::InvalidArgument, "crossover needs at least one seed");

  CrossoverReport report;
  report.assignments = assign_crossover(profiles.size(), opts.seeds);
  for (const Assignment& a : report.assignments) {
    const ReaderProfile& profile = profiles[a.profile];
    const ProfileClass klass = classify_profile(profile.pace_syll_s, profile.decoding_errors);
    struct Slot {
      const char* label;
      Mode mode;
      const Material* text;
      int order;
    };
    const Slot slots[2] = {
        {"gary", opts.first_condition, a.condition_a_on_text_a ? &text_a : &text_b, a.condition_a_first ? 1 : 2},
        {"traditional", opts.second_condition, a.condition_a_on_text_a ? &text_b : &text_a,
         a.condition_a_first ? 2 : 1},
    };
    for (int order = 1; order <= 2; ++order) {
      for (const Slot& s : slots) {
        if (s.order != order) continue;
        const SessionRun run = run_session(profile, *s.text, s.mode, a.seed, opts.run);
        report.rows.push_back({profile.name, klass, a.participant, a.seed, s.label, s.mode, s.order,
                               s.text->seg.document.id, run.metrics});
      }
    }
  }
  return report;
}

PaceFit calibrate_pace(ReaderProfile profile, std::span<const Material> texts, double target,
                       std::span<const std::uint64_t> seeds, double tolerance, const RunOptions& opts) {
  auto speed_at = [&](double pace) {
    profile.pace_syll_s = pace;
    double sum = 0.0;
    std::size_t n = 0;
    for (const Material& t : texts) {
      for (std::uint64_t s : seeds) {
        sum += run_session(profile, t, Mode::Gary, s, opts).metrics.effective_speed_syll_s;
        ++n;
      }
    }
    return sum / static_cast<double>(n);
  };
  double lo = 0.5, hi = 2.0 * opts.engine.audio_rate;
  PaceFit fit;
  for (fit.iterations = 1; fit.iterations <= 40; ++fit.iterations) {
    fit.pace = 0.5 * (lo + hi);
    fit.speed = speed_at(fit.pace);
    if (std::abs(fit.speed - target) <= tolerance) break;
    (fit.speed < target ? lo : hi) = fit.pace;
  }
  return fit;
}

}  // namespace gary
