#include <benchmark/benchmark.h>

#include "gary/gaze.hpp"
#include "gary/harness.hpp"
#include "gary/random.hpp"
#include "gary/text_model.hpp"

using namespace gary;

namespace {

const Material& faro() {
  static const Material m = load_material(GARY_DATA_DIR "/texts/faro.txt");
  return m;
}

void BM_Segment(benchmark::State& state) {
  const std::string raw = faro().seg.document.raw_text;
  for (auto _ : state) benchmark::DoNotOptimize(segment_phrases(tokenize(raw)));
}
BENCHMARK(BM_Segment);

void BM_DetectFixations(benchmark::State& state) {
  Rng rng(7);
  std::vector<ScreenSample> s;
  double x = 500, y = 300;
  for (int i = 0; i < state.range(0); ++i) {
    if (rng.uniform() < 0.05) {
      x = rng.uniform() * 1024;
      y = rng.uniform() * 768;
    }
    s.push_back({i * 1000.0 / 60.0, x + rng.normal(0, 5), y + rng.normal(0, 5), true});
  }
  for (auto _ : state) benchmark::DoNotOptimize(detect_fixations(s, {}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DetectFixations)->Arg(600)->Arg(6000);

void BM_EngineTick(benchmark::State& state) {
  SessionConfig cfg;
  cfg.mode = Mode::Traditional;
  for (auto _ : state) {
    Engine e(faro().seg, faro().pages, cfg);
    e.control(Control::Play, 0);
    double t = 0;
    while (e.state().playback != Playback::Finished) e.tick(t += 1000.0 / 60.0);
    benchmark::DoNotOptimize(e.state_hash());
  }
}
BENCHMARK(BM_EngineTick)->Unit(benchmark::kMillisecond);

void BM_RunSession(benchmark::State& state) {
  const ReaderProfile p = make_profile("dyslexic");
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_session(p, faro(), Mode::Gary, seed++).metrics);
}
BENCHMARK(BM_RunSession)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
