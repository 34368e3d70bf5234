#include <numeric>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "gary/engine.hpp"
#include "gary/error.hpp"
#include "gary/harness.hpp"
#include "gary/random.hpp"
#include "oracles.hpp"

using namespace gary;

namespace {

// Phrases: [Le anguille] [pesci misteriosi] [attraversano l'oceano] [ogni anno] [da sole] [verso il mare]
const char* kText = "Le anguille, pesci misteriosi, attraversano l'oceano. Ogni anno, da sole, verso il mare.";

Material material(const char* text = kText) { return prepare_material(text, "t", "T"); }

Engine make_engine(Mode mode, const Material& m = material(), SessionConfig cfg = {}) {
  cfg.mode = mode;
  return Engine(m.seg, m.pages, cfg);
}

Fixation fix_at(Point p, double t) { return {t - 100.0, 100.0, p}; }

Point lookahead_point(const Engine& e) { return e.lookahead_region().front().center(); }
Point active_point(const Engine& e) {
  // Centre of the first word of the highlight: inside the AOI, outside look-ahead.
  const auto hl = e.current_highlight();
  return e.pages()[e.state().page_index].locate(hl.first)->second.center();
}

std::vector<EventKind> kinds(const std::vector<EngineEvent>& ev) {
  std::vector<EventKind> out;
  for (const auto& e : ev) out.push_back(e.kind);
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no gary::Error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Timeline, PhraseDurationArithmetic) {
  SegmentedText s = segment_phrases(tokenize("Ciao."));
  s.phrases[0].syllable_count = 62;
  EXPECT_DOUBLE_EQ(build_timeline(s, 31.0).duration_ms[0], 2000.0);  // 6.2 syllables at 3.1 syll/s, scaled by ten
  s.phrases[0].syllable_count = 31;
  EXPECT_NEAR(build_timeline(s, 3.1).duration_ms[0], 10000.0, 1e-9);
}

TEST(Timeline, SumsToTotal) {
  Rng rng(5);
  SegmentedText s = segment_phrases(tokenize(oracle::random_text(rng, 150)));
  // Redistribute 434 syllables over the phrases.
  int left = 434;
  for (std::size_t i = 0; i < s.phrases.size(); ++i) {
    const int remaining = static_cast<int>(s.phrases.size() - i);
    const int give = i + 1 == s.phrases.size() ? left : std::max(1, std::min(left - (remaining - 1), 1 + static_cast<int>(rng.below(12))));
    s.phrases[i].syllable_count = give;
    left -= give;
  }
  ASSERT_EQ(left, 0);
  const AudioTimeline tl = build_timeline(s, 3.1);
  EXPECT_NEAR(tl.total_ms, 140000.0, 1e-6);
  for (std::size_t i = 1; i < tl.start_ms.size(); ++i)
    EXPECT_DOUBLE_EQ(tl.start_ms[i], tl.start_ms[i - 1] + tl.duration_ms[i - 1]);
}

TEST(Timeline, FormAScaleText) {
  // 222 words averaging about two syllables at 92.5 words per minute.
  std::string text;
  for (int i = 0; i < 222; ++i) text += (i == 7 ? "pomodoro " : "casa ");
  text.back() = '.';
  const Material m = material(text.c_str());
  ASSERT_EQ(m.seg.total_syllables, 446);
  EXPECT_NEAR(build_timeline(m.seg, kDefaultAudioRate).total_ms / 1000.0, 222.0 / 92.5 * 60.0, 0.5);
}

TEST(Timeline, NonPositiveRate) {
  const Material m = material();
  EXPECT_EQ(code_of([&] { build_timeline(m.seg, 0.0); }), ErrorCode::NonPositiveRate);
  SessionConfig cfg;
  cfg.audio_rate = -1;
  EXPECT_EQ(code_of([&] { Engine(m.seg, m.pages, cfg); }), ErrorCode::NonPositiveRate);
}

TEST(NewSession, OnePhrase) {
  const Engine e = make_engine(Mode::Gary, material("Ciao."));
  EXPECT_EQ(e.state().phrase_index, 0u);
  EXPECT_EQ(e.state().playback, Playback::Paused);
  EXPECT_EQ(e.state().pause_reason, PauseReason::NotStarted);
}

TEST(NewSession, EmptyDocument) {
  Material m = material();
  SegmentedText s = m.seg;
  s.phrases.clear();
  EXPECT_EQ(code_of([&] { Engine(s, m.pages, {}); }), ErrorCode::EmptyDocument);
}

TEST(Tick, GaryWithPermitAdvances) {
  SessionConfig cfg;
  cfg.grace_ms = 1e9;
  Engine e = make_engine(Mode::Gary, material(), cfg);
  e.control(Control::Play, 0);
  const double d0 = e.timeline().duration_ms[0];
  e.fixation(fix_at(lookahead_point(e), 300), 300);
  EXPECT_TRUE(e.state().advance_permit);
  const auto ev = e.tick(d0 + 1);
  EXPECT_EQ(kinds(ev), (std::vector<EventKind>{EventKind::PhraseEnd, EventKind::PhraseStart}));
  EXPECT_EQ(ev[1].phrase, 1u);
  EXPECT_DOUBLE_EQ(ev[1].t_ms, d0);
  EXPECT_FALSE(e.state().advance_permit);
}

TEST(Tick, GaryWithoutPermitPausesAtPhraseEnd) {
  SessionConfig cfg;
  cfg.grace_ms = 1e9;
  Engine e = make_engine(Mode::Gary, material(), cfg);
  e.control(Control::Play, 0);
  const double d0 = e.timeline().duration_ms[0];
  const auto ev = e.tick(d0 + 500);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, EventKind::Pause);
  EXPECT_EQ(ev[0].reason, PauseReason::NoPermit);
  EXPECT_DOUBLE_EQ(ev[0].t_ms, d0);
  EXPECT_DOUBLE_EQ(e.state().elapsed_ms(), d0);
  e.tick(d0 + 5000);
  EXPECT_DOUBLE_EQ(e.state().elapsed_ms(), d0);
}

TEST(Tick, TraditionalAdvancesUnconditionally) {
  Engine e = make_engine(Mode::Traditional);
  e.control(Control::Play, 0);
  e.tick(e.timeline().duration_ms[0] + 1);
  EXPECT_EQ(e.state().phrase_index, 1u);
  e.tick(e.timeline().total_ms + 1);
  EXPECT_EQ(e.state().playback, Playback::Finished);
  EXPECT_DOUBLE_EQ(e.log().back().t_ms, e.timeline().total_ms);
}

TEST(Tick, GazeAwayAfterGrace) {
  Engine e = make_engine(Mode::Gary);
  e.control(Control::Play, 0);
  const auto ev = e.tick(600);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].reason, PauseReason::GazeAway);
  EXPECT_DOUBLE_EQ(ev[0].t_ms, kDefaultGraceMs);
}

TEST(Tick, ClockRegression) {
  Engine e = make_engine(Mode::Gary);
  e.tick(100);
  EXPECT_EQ(code_of([&] { e.tick(50); }), ErrorCode::ClockRegression);
}

TEST(Fixation, LookaheadSetsPermit) {
  Engine e = make_engine(Mode::Gary);
  e.control(Control::Play, 0);
  const auto ev = e.fixation(fix_at(lookahead_point(e), 200), 200);
  ASSERT_EQ(ev.back().kind, EventKind::FixationIn);
  EXPECT_EQ(ev.back().region, FixationRegion::Lookahead);
  EXPECT_TRUE(e.state().advance_permit);
}

TEST(Fixation, ActiveOnlyNeverAdvances) {
  Engine e = make_engine(Mode::Gary);
  e.control(Control::Play, 0);
  const double d0 = e.timeline().duration_ms[0];
  for (double t = 200; t < d0 + 2000; t += 200) {
    e.fixation(fix_at(active_point(e), t), t);
    EXPECT_EQ(e.state().phrase_index, 0u);
  }
  EXPECT_EQ(e.state().playback, Playback::Paused);
  EXPECT_EQ(e.state().pause_reason, PauseReason::NoPermit);
}

TEST(Fixation, PermitAfterNoPermitPauseAdvancesImmediately) {
  SessionConfig cfg;
  cfg.grace_ms = 1e9;
  Engine e = make_engine(Mode::Gary, material(), cfg);
  e.control(Control::Play, 0);
  const double d0 = e.timeline().duration_ms[0];
  e.tick(d0 + 300);
  const auto ev = e.fixation(fix_at(lookahead_point(e), d0 + 400), d0 + 400);
  EXPECT_EQ(kinds(ev), (std::vector<EventKind>{EventKind::FixationIn, EventKind::Resume, EventKind::PhraseEnd,
                                               EventKind::PhraseStart}));
  EXPECT_EQ(e.state().phrase_index, 1u);
  EXPECT_EQ(e.state().playback, Playback::Playing);
  EXPECT_DOUBLE_EQ(e.state().elapsed_ms(), 0.0);
}

TEST(Fixation, GazeAwayResumesInPlace) {
  Engine e = make_engine(Mode::Gary);
  e.control(Control::Play, 0);
  e.tick(1000);
  ASSERT_EQ(e.state().pause_reason, PauseReason::GazeAway);
  const double pinned = e.state().elapsed_ms();
  e.fixation(fix_at(active_point(e), 3000), 3000);
  EXPECT_EQ(e.state().playback, Playback::Playing);
  EXPECT_DOUBLE_EQ(e.state().elapsed_ms(), pinned);
  EXPECT_EQ(e.state().phrase_index, 0u);
}

TEST(Fixation, OffTextChangesNothing) {
  Engine e = make_engine(Mode::Gary);
  e.control(Control::Play, 0);
  const double before = e.state().last_on_text_ms;
  e.fixation(fix_at({512, 2000}, 300), 300);
  EXPECT_EQ(e.log().back().region, FixationRegion::Off);
  EXPECT_DOUBLE_EQ(e.state().last_on_text_ms, before);
  EXPECT_FALSE(e.state().advance_permit);
}

TEST(Fixation, TraditionalIgnoresButLogs) {
  Engine e = make_engine(Mode::Traditional);
  e.control(Control::Play, 0);
  e.fixation(fix_at(lookahead_point(e), 100), 100);
  EXPECT_TRUE(e.log().back().ignored);
  EXPECT_FALSE(e.state().advance_permit);
}

TEST(Control, TraditionalSkipForward) {
  Engine e = make_engine(Mode::Traditional);
  e.control(Control::Play, 0);
  for (int i = 0; i < 3; ++i) e.control(Control::SkipForward, 10.0 * i);
  ASSERT_EQ(e.state().phrase_index, 3u);
  e.control(Control::SkipForward, 100);
  EXPECT_EQ(e.state().phrase_index, 4u);
  EXPECT_DOUBLE_EQ(e.state().elapsed_ms(), 0.0);
}

TEST(Control, SkipBackwardAtStartIsNoOp) {
  Engine e = make_engine(Mode::Traditional);
  e.control(Control::Play, 0);
  const auto h = e.state_hash();
  const auto ev = e.control(Control::SkipBackward, 0);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].outcome, ControlOutcome::NoOp);
  EXPECT_EQ(e.state_hash(), h);
}

TEST(Control, GarySkipUnsupported) {
  Engine e = make_engine(Mode::Gary);
  EXPECT_EQ(code_of([&] { e.control(Control::SkipForward, 0); }), ErrorCode::UnsupportedControl);
  EXPECT_EQ(code_of([&] { e.control(Control::SkipBackward, 0); }), ErrorCode::UnsupportedControl);
}

TEST(Control, PausePlayResumesAtSameOffset) {
  Engine e = make_engine(Mode::Traditional);
  e.control(Control::Play, 0);
  e.control(Control::Pause, 700);
  e.tick(5000);
  EXPECT_DOUBLE_EQ(e.state().elapsed_ms(), 700);
  e.control(Control::Play, 5000);
  e.tick(5100);
  EXPECT_DOUBLE_EQ(e.state().elapsed_ms(), 800);
}

TEST(Control, PlayDoesNotOverrideNoPermit) {
  SessionConfig cfg;
  cfg.grace_ms = 1e9;
  Engine e = make_engine(Mode::Gary, material(), cfg);
  e.control(Control::Play, 0);
  e.tick(e.timeline().duration_ms[0] + 10);
  const auto ev = e.control(Control::Play, e.timeline().duration_ms[0] + 20);
  EXPECT_EQ(ev.back().outcome, ControlOutcome::NoOp);
  EXPECT_EQ(e.state().pause_reason, PauseReason::NoPermit);
}

TEST(Highlight, FollowsPhrases) {
  const Material m = material("uno due tre, quattro cinque.");
  Engine e = make_engine(Mode::Traditional, m);
  EXPECT_EQ(e.current_highlight(), (WordRange{0, 2}));
  e.control(Control::Play, 0);
  e.tick(e.timeline().duration_ms[0] + 1);
  EXPECT_EQ(e.current_highlight(), (WordRange{3, 4}));
  e.tick(e.timeline().total_ms + 1);
  EXPECT_EQ(code_of([&] { e.current_highlight(); }), ErrorCode::SessionFinished);
}

TEST(PageTurn, SettleWindowAcceptsFirstLine) {
  std::string text;
  for (int i = 0; i < 40; ++i) text += "la casa del mare è blu, ";
  text += "fine.";
  const Material m = material(text.c_str());
  ASSERT_GE(m.pages.size(), 2u);
  Engine e = make_engine(Mode::Traditional, m);
  e.control(Control::Play, 0);
  const std::size_t first_p1 = m.pages[1].phrases.first;
  e.tick(e.timeline().start_ms[first_p1] + 1);
  ASSERT_EQ(e.state().page_index, 1u);
  // Traditional never settles; GARY does.
  SessionConfig cfg;
  cfg.grace_ms = 1e9;
  Engine g = make_engine(Mode::Gary, m, cfg);
  g.control(Control::Play, 0);
  while (g.state().page_index == 0) {
    const double t = g.state().clock_ms + 1;
    if (!g.lookahead_region().empty()) g.fixation(fix_at(lookahead_point(g), t), t);
    g.tick(g.state().anchor_ms + g.timeline().duration_ms[g.state().phrase_index] + 0.5);
  }
  ASSERT_EQ(g.state().page_index, 1u);
  const Point first_word = m.pages[1].lines[0].words[0].box.center();
  EXPECT_EQ(g.classify(first_word), FixationRegion::Lookahead);
  g.tick(g.state().clock_ms + kDefaultPageSettleMs + 1);
  if (g.state().phrase_index == first_p1) EXPECT_EQ(g.classify(first_word), FixationRegion::Active);
}

TEST(LayoutUpdate, ReplacesBoxes) {
  const Material m = material();
  Engine e = make_engine(Mode::Gary, m);
  std::vector<WordBox> boxes;
  for (const Line& l : m.pages[0].lines)
    for (WordBox wb : l.words) {
      wb.box.y += 100;
      boxes.push_back(wb);
    }
  e.update_layout(0, boxes, 0);
  EXPECT_EQ(e.log().back().kind, EventKind::LayoutUpdate);
  EXPECT_DOUBLE_EQ(e.pages()[0].lines[0].words[0].box.y, m.pages[0].lines[0].words[0].box.y + 100);
  boxes.pop_back();
  EXPECT_EQ(code_of([&] { e.update_layout(0, boxes, 1); }), ErrorCode::InvalidArgument);
}

TEST(EventJson, RoundTrip) {
  Engine e = make_engine(Mode::Gary);
  e.control(Control::Play, 0);
  e.fixation(fix_at(lookahead_point(e), 250), 250);
  e.tick(10000);
  for (const EngineEvent& ev : e.log()) {
    const nlohmann::json j = ev;
    EXPECT_EQ(nlohmann::json(j.get<EngineEvent>()), j);
  }
}

// ---------------------------------------------------------------------------
// Properties over randomized sequences

TEST(Properties, GateSoundness) {
  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const Material m = material(oracle::random_text(rng, 20 + rng.below(300)).c_str());
    Engine e = make_engine(Mode::Gary, m);
    for (const auto& in : oracle::random_inputs(m, Mode::Gary, rng, 400)) oracle::apply(e, in);
    const auto v = oracle::gate_violation(e.log());
    ASSERT_FALSE(v.has_value()) << *v;
  }
}

TEST(Properties, TraditionalIgnoresFixations) {
  Rng rng(102);
  for (int trial = 0; trial < 200; ++trial) {
    const Material m = material(oracle::random_text(rng, 20 + rng.below(200)).c_str());
    const auto inputs = oracle::random_inputs(m, Mode::Traditional, rng, 300);
    Engine with = make_engine(Mode::Traditional, m);
    Engine without = make_engine(Mode::Traditional, m);
    for (const auto& in : inputs) {
      oracle::apply(with, in);
      if (in.kind == oracle::Input::Fixation) {
        without.tick(in.t_ms);
      } else {
        oracle::apply(without, in);
      }
    }
    ASSERT_TRUE(oracle::same_outcome(with.state(), without.state()));
    ASSERT_EQ(with.state_hash(), without.state_hash());
    const auto a = oracle::without_fixations(with.log());
    const auto b = without.log();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(nlohmann::json(a[i]), nlohmann::json(b[i]));
  }
}

TEST(Properties, TickInvariance) {
  Rng rng(103);
  for (int trial = 0; trial < 200; ++trial) {
    const Mode mode = trial % 2 ? Mode::Gary : Mode::Traditional;
    const Material m = material(oracle::random_text(rng, 20 + rng.below(200)).c_str());
    const auto inputs = oracle::random_inputs(m, mode, rng, 300);
    Engine coarse = make_engine(mode, m);
    Engine fine = make_engine(mode, m);
    double t = 0;
    for (const auto& in : inputs) {
      if (in.kind != oracle::Input::Tick) oracle::apply(coarse, in);
      for (; t < in.t_ms; t += 1 + rng.uniform() * 40) fine.tick(t);
      oracle::apply(fine, in);
    }
    const double end = inputs.back().t_ms + 1;
    coarse.tick(end);
    fine.tick(end);
    ASSERT_EQ(coarse.state_hash(), fine.state_hash());
    ASSERT_EQ(coarse.log().size(), fine.log().size());
    for (std::size_t i = 0; i < coarse.log().size(); ++i)
      ASSERT_EQ(nlohmann::json(coarse.log()[i]), nlohmann::json(fine.log()[i]));
  }
}

TEST(Properties, TimeConservation) {
  // Without skips, wall time = audio played + time paused.
  Rng rng(104);
  for (int trial = 0; trial < 200; ++trial) {
    const Material m = material(oracle::random_text(rng, 20 + rng.below(150)).c_str());
    Engine e = make_engine(Mode::Gary, m);
    for (const auto& in : oracle::random_inputs(m, Mode::Gary, rng, 500)) oracle::apply(e, in);
    const double now = e.state().clock_ms + 10;
    e.tick(now);
    double paused = 0, pause_start = 0, end = now;
    bool in_pause = false;
    for (const auto& ev : e.log()) {
      if (ev.kind == EventKind::Pause) {
        in_pause = true;
        pause_start = ev.t_ms;
      } else if (ev.kind == EventKind::Resume && in_pause) {
        in_pause = false;
        paused += ev.t_ms - pause_start;
      } else if (ev.kind == EventKind::Finish) {
        end = ev.t_ms;
      }
    }
    if (in_pause) paused += end - pause_start;
    const auto& tl = e.timeline();
    const std::size_t i = e.state().phrase_index;
    const double played = tl.start_ms[i] + e.state().elapsed_ms();
    ASSERT_NEAR(end - 0.0, played + paused, 1e-6) << "trial " << trial;
  }
}
