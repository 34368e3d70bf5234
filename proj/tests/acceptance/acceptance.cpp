// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gary/error.hpp"
#include "gary/gaze.hpp"
#include "gary/harness.hpp"
#include "gary/random.hpp"
#include "gary/session_file.hpp"
#include "gary/text_model.hpp"
#include "oracles.hpp"

using namespace gary;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

const Material& faro() {
  static const Material m = load_material(GARY_DATA_DIR "/texts/faro.txt");
  return m;
}
const Material& orto() {
  static const Material m = load_material(GARY_DATA_DIR "/texts/orto.txt");
  return m;
}

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// 1 ------------------------------------------------------------------------
void traditional_speed(Outcome& o) {
  std::vector<ReaderProfile> profiles;
  for (const auto& name : preset_names()) profiles.push_back(make_profile(name));
  double lo = 1e9, hi = -1e9;
  int n = 0;
  for (const ReaderProfile& p : profiles) {
    for (const Material* m : {&faro(), &orto()}) {
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const double v = run_session(p, *m, Mode::Traditional, seed).metrics.effective_speed_syll_s;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        ++n;
        o.check(std::abs(v - 3.1) <= 0.05, p.name + " seed " + std::to_string(seed) + " speed " + fmt(v));
      }
    }
  }
  o.detail << n << " sessions, speed range [" << fmt(lo) << ", " << fmt(hi) << "] syll/s";
}

// 2 ------------------------------------------------------------------------
void gary_speeds(Outcome& o) {
  for (const auto& [preset, target] : std::vector<std::pair<std::string, double>>{{"dyslexic", 2.2}, {"typical", 2.4}}) {
    std::vector<double> v;
    for (std::uint64_t seed = 1; seed <= 30; ++seed)
      v.push_back(run_session(make_profile(preset), faro(), Mode::Gary, seed).metrics.effective_speed_syll_s);
    const Aggregate a = aggregate(v);
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    o.check(std::abs(a.mean - target) <= 0.2, preset + " mean " + fmt(a.mean));
    o.check(*mn >= target - 0.2 && *mx <= target + 0.2, preset + " range");
    o.detail << preset << " mean " << fmt(a.mean) << " sd " << fmt(a.sd) << " range [" << fmt(*mn) << ", "
             << fmt(*mx) << "] (target " << fmt(target, 1) << "); ";
  }
  o.detail << faro().seg.total_syllables << "-syllable text, 30 seeds";
}

// 3 ------------------------------------------------------------------------
void gate_soundness(Outcome& o) {
  Rng rng(20240601);
  int violations = 0, advances = 0, variant = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Material m = prepare_material(oracle::random_text(rng, 20 + rng.below(300)), "r", "r");
    SessionConfig cfg;
    cfg.mode = Mode::Gary;
    Engine e(m.seg, m.pages, cfg);
    for (const auto& in : oracle::random_inputs(m, Mode::Gary, rng, 400)) oracle::apply(e, in);
    for (const auto& ev : e.log()) advances += ev.kind == EventKind::PhraseStart;
    if (const auto v = oracle::gate_violation(e.log())) {
      ++violations;
      o.check(false, "sequence " + std::to_string(trial) + ": " + *v);
    }

    const auto inputs = oracle::random_inputs(m, Mode::Traditional, rng, 300);
    cfg.mode = Mode::Traditional;
    Engine with(m.seg, m.pages, cfg), without(m.seg, m.pages, cfg);
    for (const auto& in : inputs) {
      oracle::apply(with, in);
      if (in.kind == oracle::Input::Fixation) {
        without.tick(in.t_ms);
      } else {
        oracle::apply(without, in);
      }
    }
    if (!oracle::same_outcome(with.state(), without.state()) || with.state_hash() != without.state_hash() ||
        nlohmann::json(oracle::without_fixations(with.log())) != nlohmann::json(without.log())) {
      ++variant;
      o.check(false, "traditional sequence " + std::to_string(trial) + " depends on fixations");
    }
  }
  o.detail << "1000 GARY sequences, " << advances << " phrase starts, " << violations
           << " gate violations; 1000 Traditional sequences, " << variant << " fixation-dependent outcomes";
}

// 4 ------------------------------------------------------------------------
void fixation_oracle(Outcome& o) {
  Rng rng(4242);
  std::size_t fixations = 0, mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = oracle::random_stream(rng, 500);
    const FixationParams p{20.0 + rng.uniform() * 80.0, 50.0 + rng.uniform() * 150.0};
    const auto got = detect_fixations(s, p);
    const auto want = oracle::idt(s, p.dispersion_px, p.min_duration_ms);
    fixations += want.size();
    if (got != want) {
      ++mismatches;
      o.check(false, "stream " + std::to_string(trial));
    }
  }
  o.detail << "200 streams, " << fixations << " oracle fixations, " << mismatches << " mismatching streams";
}

// 5 ------------------------------------------------------------------------
void calibration_recovery(Outcome& o) {
  constexpr double W = 1024, H = 768;
  Rng rng(5555);
  // Affine: device = A(screen); recovered map must invert it at the targets.
  double worst_affine = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const double sx = 0.8 + 0.4 * rng.uniform(), sy = 0.8 + 0.4 * rng.uniform();
    const double shx = 0.1 * (rng.uniform() - 0.5), tx = 60 * (rng.uniform() - 0.5), ty = 60 * (rng.uniform() - 0.5);
    const oracle::Mapping to_device = [=](Point p) { return Point{sx * p.x + shx * p.y + tx, sy * p.y + ty}; };
    const auto targets = oracle::synthetic_targets(to_device, 0.0, rng, 10, W, H);
    const CalibrationModel m = fit_calibration(targets, W, H);
    for (const auto& t : targets) {
      const Point d = to_device(t.target);
      const Point q = m.map(d.x, d.y);
      worst_affine = std::max(worst_affine, std::hypot(q.x - t.target.x, q.y - t.target.y));
    }
  }
  // Quadratic: screen = Q(device) with random second-order coefficients.
  double worst_quad = 0;
  for (int trial = 0; trial < 20; ++trial) {
    double c[12];
    for (double& v : c) v = rng.normal();
    const auto quad = [&](Point d) {
      const double u = d.x / 1000, v = d.y / 1000;
      return Point{c[0] * 20 + d.x * (1 + 0.05 * c[1]) + 30 * c[2] * v + 40 * c[3] * u * u + 40 * c[4] * v * v +
                       40 * c[5] * u * v,
                   c[6] * 20 + 30 * c[7] * u + d.y * (1 + 0.05 * c[8]) + 40 * c[9] * u * u + 40 * c[10] * v * v +
                       40 * c[11] * u * v};
    };
    std::vector<CalibrationTarget> targets;
    for (Point g : calibration_grid(W, H)) {
      CalibrationTarget t{quad(g), {}};
      for (int k = 0; k < 8; ++k) t.samples.push_back({k * 16.0, g.x, g.y, true});
      targets.push_back(t);
    }
    const CalibrationModel m = fit_calibration(targets, W, H);
    for (const auto& t : targets) {
      const Point q = m.map(t.samples[0].x, t.samples[0].y);
      worst_quad = std::max(worst_quad, std::hypot(q.x - t.target.x, q.y - t.target.y));
    }
  }
  o.check(worst_affine < 1e-6, "affine error " + std::to_string(worst_affine));
  o.check(worst_quad < 1e-6, "quadratic error " + std::to_string(worst_quad));

  double worst_rms = 0;
  const oracle::Mapping tracker = [](Point p) { return Point{0.92 * p.x - 24, 0.95 * p.y + 18}; };
  for (int trial = 0; trial < 100; ++trial) {
    const double rms = fit_calibration(oracle::synthetic_targets(tracker, 5.0, rng, 30, W, H), W, H).rms_error_px;
    worst_rms = std::max(worst_rms, rms);
  }
  o.check(worst_rms <= 7.5, "noisy rms " + fmt(worst_rms));
  char buf[200];
  std::snprintf(buf, sizeof buf, "noiseless max error affine %.2e px, quadratic %.2e px; sigma 5 px worst rms %.3f px over 100 trials",
                worst_affine, worst_quad, worst_rms);
  o.detail << buf;
}

// 6 ------------------------------------------------------------------------
void readability_fixture(Outcome& o) {
  std::ifstream in(GARY_FIXTURE_DIR "/readability.json");
  const auto j = nlohmann::json::parse(in);
  int items = 0, words = 0;
  double worst = 0;
  for (const auto& item : j.at("items")) {
    ++items;
    const Document d = tokenize(item.at("text").get<std::string>());
    const double g = gulpease(d);
    worst = std::max(worst, std::abs(g - item.at("gulpease").get<double>()));
    o.check(std::abs(g - item.at("gulpease").get<double>()) <= 0.5, "gulpease item " + std::to_string(items));
    for (const auto& w : item.at("words")) {
      ++words;
      const int got = count_syllables(w.at("word").get<std::string>());
      o.check(got == w.at("syllables").get<int>(), "syllables of " + w.at("hyphenation").get<std::string>());
    }
    o.check(segment_phrases(d).total_syllables == item.at("total_syllables").get<int>(),
            "total syllables item " + std::to_string(items));
  }
  o.check(items == 10, "fixture has 10 items");
  o.detail << items << " items, " << words << " hand-hyphenated words, max GULPEASE deviation " << fmt(worst, 4);
}

// 7 ------------------------------------------------------------------------
void crossover_report(Outcome& o) {
  std::vector<ReaderProfile> profiles{make_profile("typical"), make_profile("dyslexic"),
                                      make_profile("dyslexic_inaccurate"), make_profile("dyslexic")};
  profiles[3].name = "dyslexic_b";
  profiles[3].seed = 2112;
  CrossoverOptions opts;
  opts.seeds = {1, 2, 3};
  const CrossoverReport r = run_crossover(profiles, faro(), orto(), opts);

  // Counterbalancing: half start with GARY, and order x text is balanced.
  const std::size_t n = r.assignments.size();
  std::size_t gary_first = 0, gary_on_a = 0, cell[2][2] = {{0, 0}, {0, 0}};
  for (const Assignment& a : r.assignments) {
    gary_first += a.condition_a_first;
    gary_on_a += a.condition_a_on_text_a;
    ++cell[a.condition_a_first][a.condition_a_on_text_a];
  }
  o.check(2 * gary_first == n, "half start with GARY");
  o.check(2 * gary_on_a == n, "half read text A with GARY");
  o.check(cell[0][0] == cell[0][1] && cell[0][1] == cell[1][0] && cell[1][0] == cell[1][1], "2x2 cells equal");
  for (const SessionRow& row : r.rows) {
    const Assignment& a = r.assignments[row.participant];
    const bool is_gary = row.condition == "gary";
    o.check((row.mode == Mode::Gary) == is_gary, "condition label matches mode");
    o.check(row.order == ((is_gary == a.condition_a_first) ? 1 : 2), "order follows assignment");
    const bool on_a = row.text_id == faro().seg.document.id;
    o.check(on_a == (is_gary == a.condition_a_on_text_a), "text follows assignment");
  }
  o.check(r.summary()["started_with_gary"].get<std::size_t>() == n / 2, "summary reports half");

  // Antisymmetry: relabelling the conditions negates every delta.
  CrossoverReport swapped = r;
  for (SessionRow& row : swapped.rows) row.condition = row.condition == "gary" ? "traditional" : "gary";
  std::size_t deltas = 0;
  for (const Assignment& a : r.assignments) {
    const auto g1 = participant_gains(r, a.participant);
    const auto g2 = participant_gains(swapped, a.participant);
    for (std::size_t k = 0; k < g1.size(); ++k, ++deltas) o.check(g1[k].delta == -g2[k].delta, "antisymmetry");
  }

  // Synchrony of the dyslexic preset.
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const double g = run_session(make_profile("dyslexic"), faro(), Mode::Gary, seed).metrics.synchrony;
    const double t = run_session(make_profile("dyslexic"), faro(), Mode::Traditional, seed).metrics.synchrony;
    wins += g > t;
  }
  o.check(wins >= 18, "synchrony wins " + std::to_string(wins));
  o.detail << n << " participants, " << gary_first << " started with GARY, cells " << cell[1][1] << "/" << cell[1][0]
           << "/" << cell[0][1] << "/" << cell[0][0] << "; " << deltas << " deltas negate under relabelling; "
           << "dyslexic synchrony GARY > Traditional in " << wins << "/20 seeds";
}

// 8 ------------------------------------------------------------------------
bool verdict_passes(const std::string& content) {
  try {
    return verify_session(content).pass;
  } catch (const Error&) {
    return false;
  }
}

void replay_determinism(Outcome& o) {
  const std::vector<std::string> presets = preset_names();
  std::size_t passed = 0, mutations = 0, caught = 0;
  Rng rng(8888);
  for (int k = 0; k < 50; ++k) {
    const ReaderProfile p = make_profile(presets[k % presets.size()]);
    const Material& m = k % 2 ? orto() : faro();
    const Mode mode = k % 5 == 4 ? Mode::Traditional : Mode::Gary;
    const std::string file = run_session(p, m, mode, 100 + k).session_file();
    const ReplayVerdict v = verify_session(file);
    passed += v.pass;
    o.check(v.pass, "session " + std::to_string(k) + ": " + v.reason);
    for (int s = 0; s < 40; ++s) {
      std::string mutated = file;
      const std::size_t at = rng.below(mutated.size());
      mutated[at] = static_cast<char>(static_cast<unsigned char>(mutated[at]) ^ (1u << rng.below(8)));
      ++mutations;
      const bool ok = !verdict_passes(mutated);
      caught += ok;
      o.check(ok, "mutation at byte " + std::to_string(at) + " of session " + std::to_string(k));
    }
  }

  // Exhaustive: every byte of a short session, every bit.
  const Material small = prepare_material("Le anguille, pesci misteriosi, attraversano l'oceano.", "small", "small");
  const std::string file = run_session(make_profile("typical"), small, Mode::Gary, 1).session_file();
  std::size_t exhaustive = 0, exhaustive_caught = 0;
  for (std::size_t at = 0; at < file.size(); ++at) {
    for (int bit = 0; bit < 8; ++bit) {
      std::string mutated = file;
      mutated[at] = static_cast<char>(static_cast<unsigned char>(mutated[at]) ^ (1u << bit));
      ++exhaustive;
      const bool ok = !verdict_passes(mutated);
      exhaustive_caught += ok;
      o.check(ok, "exhaustive mutation at byte " + std::to_string(at));
    }
  }
  o.detail << passed << "/50 sessions PASS; " << caught << "/" << mutations << " sampled mutations rejected; "
           << exhaustive_caught << "/" << exhaustive << " single-byte mutations of a " << file.size()
           << "-byte session rejected";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"traditional speed 3.1 +/- 0.05 syll/s", traditional_speed},
      {"GARY closed-loop speeds (dyslexic 2.2, typical 2.4, +/- 0.2)", gary_speeds},
      {"gate soundness and Traditional fixation invariance", gate_soundness},
      {"I-DT equals brute-force oracle", fixation_oracle},
      {"calibration recovery", calibration_recovery},
      {"GULPEASE and syllabification fixture", readability_fixture},
      {"crossover counterbalancing, antisymmetry, synchrony", crossover_report},
      {"replay determinism and mutation detection", replay_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("[%s] %zu. %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.str().c_str(), s);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
