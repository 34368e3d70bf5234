// gary: command-line front end for the pacing engine, the simulator and the
// live session service.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gary/error.hpp"
#include "gary/harness.hpp"
#include "gary/session_file.hpp"
#include "gary/simulator.hpp"
#include "ws_server.hpp"

namespace fs = std::filesystem;
using namespace gary;

namespace {

// Exit codes: 0 ok, 1 failure / FAIL verdict, 2 bad input, 3 corrupt log.
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCorrupt = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("no such file: " + path);
}

std::vector<std::uint64_t> seed_list(std::uint64_t first, int count) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
  return seeds;
}

ReaderProfile find_profile(const std::string& name, const std::string& profiles_path) {
  if (!profiles_path.empty()) {
    require_file(profiles_path);
    for (const ReaderProfile& p : load_profiles(nlohmann::json::parse(read_text_file(profiles_path)))) {
      if (p.name == name) return p;
    }
  }
  try {
    return make_profile(name);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

Mode mode_arg(const std::string& s) {
  try {
    return parse_mode(s);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

tools::WsServer* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaze-gated read-aloud pacing engine and reading simulator"};
  app.require_subcommand(1);

  // segment
  auto* seg_cmd = app.add_subcommand("segment", "Tokenize and segment a text; print JSON");
  std::string seg_path;
  int seg_max_words = kMaxPhraseWords;
  seg_cmd->add_option("file", seg_path, "UTF-8 text file")->required();
  seg_cmd->add_option("--max-words", seg_max_words, "maximum words per phrase (1-5)")->check(CLI::Range(1, 5));

  // run-sim
  auto* sim_cmd = app.add_subcommand("run-sim", "Run one simulated session; print metrics JSON");
  std::string sim_text, sim_profile = "typical", sim_mode = "gary", sim_profiles, sim_log, sim_gaze;
  std::uint64_t sim_seed = 1;
  double sim_timeout = 10.0;
  sim_cmd->add_option("text", sim_text, "UTF-8 text file")->required();
  sim_cmd->add_option("--profile", sim_profile, "preset or profile name");
  sim_cmd->add_option("--profiles", sim_profiles, "JSON file with extra profiles");
  sim_cmd->add_option("--mode", sim_mode, "gary | traditional");
  sim_cmd->add_option("--seed", sim_seed, "run seed");
  sim_cmd->add_option("--log", sim_log, "session log path (default: $GARY_LOG_DIR/<id>.jsonl)");
  sim_cmd->add_option("--export-gaze", sim_gaze, "write the raw gaze trace as CSV");
  sim_cmd->add_option("--timeout-factor", sim_timeout, "give up after this many timeline lengths");

  // crossover
  auto* xo_cmd = app.add_subcommand("crossover", "Run the counterbalanced crossover from a config file");
  std::string xo_config, xo_out = ".";
  std::optional<int> xo_seeds;
  std::uint64_t xo_first_seed = 1;
  xo_cmd->add_option("config", xo_config, "crossover JSON config")->required();
  xo_cmd->add_option("--seeds", xo_seeds, "number of seeds (overrides the config)")->check(CLI::PositiveNumber);
  xo_cmd->add_option("--first-seed", xo_first_seed, "first seed");
  xo_cmd->add_option("--out", xo_out, "output directory for crossover.csv and crossover.json");

  // replay
  auto* rp_cmd = app.add_subcommand("replay", "Verify a session log by re-execution");
  std::string rp_path;
  rp_cmd->add_option("file", rp_path, "session log")->required();

  // serve
  auto* sv_cmd = app.add_subcommand("serve", "Serve live sessions over websocket");
  std::string sv_text, sv_mode = "gary", sv_address = "127.0.0.1";
  int sv_port = 8765;
  std::size_t sv_max = 8;
  sv_cmd->add_option("--text", sv_text, "UTF-8 text file")->required();
  sv_cmd->add_option("--mode", sv_mode, "gary | traditional");
  sv_cmd->add_option("--port", sv_port, "TCP port (0 = any)")->check(CLI::Range(0, 65535));
  sv_cmd->add_option("--address", sv_address, "bind address");
  sv_cmd->add_option("--max-sessions", sv_max, "concurrent session limit");

  // calibrate
  auto* cal_cmd = app.add_subcommand("calibrate", "Fit a profile's pace to a target GARY speed");
  std::string cal_profile = "typical", cal_profiles;
  std::vector<std::string> cal_texts;
  double cal_target = 2.4;
  int cal_seeds = 10;
  cal_cmd->add_option("--profile", cal_profile, "preset or profile name");
  cal_cmd->add_option("--profiles", cal_profiles, "JSON file with extra profiles");
  cal_cmd->add_option("--target", cal_target, "target speed in syll/s");
  cal_cmd->add_option("--seeds", cal_seeds, "seeds per text")->check(CLI::PositiveNumber);
  cal_cmd->add_option("--texts", cal_texts, "text files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*seg_cmd) {
      require_file(seg_path);
      const Material m = load_material(seg_path, {}, seg_max_words);
      std::cout << nlohmann::json(m.seg).dump(2) << '\n';
      return 0;
    }

    if (*sim_cmd) {
      require_file(sim_text);
      const ReaderProfile profile = find_profile(sim_profile, sim_profiles);
      const Mode mode = mode_arg(sim_mode);
      RunOptions opts;
      opts.timeout_factor = sim_timeout;
      opts.record_gaze = !sim_gaze.empty();
      const Material text = load_material(sim_text);
      const SessionRun run = run_session(profile, text, mode, sim_seed, opts);

      std::string log_path = sim_log;
      if (log_path.empty()) {
        const char* dir = std::getenv("GARY_LOG_DIR");
        log_path = (fs::path(dir && *dir ? dir : ".") / (run.header.session_id + ".jsonl")).string();
      }
      write_text_file(log_path, run.session_file());
      if (!sim_gaze.empty()) {
        std::ofstream out(sim_gaze);
        write_gaze_csv(out, run.gaze);
      }
      nlohmann::json j = run.metrics;
      j["session_id"] = run.header.session_id;
      j["log"] = log_path;
      j["calibration_rms_px"] = run.calibration.rms_error_px;
      std::cout << j.dump(2) << '\n';
      return 0;
    }

    if (*xo_cmd) {
      require_file(xo_config);
      const nlohmann::json cfg = nlohmann::json::parse(read_text_file(xo_config));
      const fs::path base = fs::path(xo_config).parent_path();
      const auto profiles = load_profiles(cfg);
      if (profiles.size() < 2) throw UsageError("crossover needs at least two profiles");
      auto text_path = [&](const char* key) {
        if (!cfg.contains(key)) throw UsageError(std::string("config has no ") + key);
        const fs::path p = cfg.at(key).get<std::string>();
        const std::string resolved = p.is_absolute() ? p.string() : (base / p).string();
        require_file(resolved);
        return resolved;
      };
      const Material a = load_material(text_path("text_a"));
      const Material b = load_material(text_path("text_b"));
      CrossoverOptions opts;
      opts.seeds = seed_list(xo_first_seed, xo_seeds.value_or(cfg.value("seeds", 1)));
      const CrossoverReport report = run_crossover(profiles, a, b, opts);
      fs::create_directories(xo_out);
      write_text_file((fs::path(xo_out) / "crossover.csv").string(), report.csv());
      write_text_file((fs::path(xo_out) / "crossover.json").string(), report.summary().dump(2) + "\n");
      std::cout << (fs::path(xo_out) / "crossover.csv").string() << '\n'
                << (fs::path(xo_out) / "crossover.json").string() << '\n';
      return 0;
    }

    if (*rp_cmd) {
      require_file(rp_path);
      const ReplayVerdict v = verify_session(read_text_file(rp_path));
      if (v.pass) {
        std::cout << "PASS\n";
        return 0;
      }
      std::cout << "FAIL: " << v.reason << '\n';
      return kExitFail;
    }

    if (*sv_cmd) {
      require_file(sv_text);
      tools::ServerOptions opts;
      opts.address = sv_address;
      opts.port = static_cast<unsigned short>(sv_port);
      opts.max_sessions = sv_max;
      opts.service.session.mode = mode_arg(sv_mode);
      tools::WsServer server(load_material(sv_text), opts);
      const unsigned short port = server.listen();
      std::cout << "listening on ws://" << sv_address << ':' << port << std::endl;
      g_server = &server;
      std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
      std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
      server.run();
      g_server = nullptr;
      return 0;
    }

    if (*cal_cmd) {
      std::vector<Material> texts;
      for (const auto& t : cal_texts) {
        require_file(t);
        texts.push_back(load_material(t));
      }
      const ReaderProfile profile = find_profile(cal_profile, cal_profiles);
      const auto seeds = seed_list(1, cal_seeds);
      const PaceFit fit = calibrate_pace(profile, texts, cal_target, seeds);
      std::cout << nlohmann::json{{"profile", profile.name},
                                  {"target", cal_target},
                                  {"pace_syll_s", fit.pace},
                                  {"speed_syll_s", fit.speed},
                                  {"iterations", fit.iterations}}
                       .dump(2)
                << '\n';
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (e.code() == ErrorCode::CorruptLog) return kExitCorrupt;
    if (e.code() == ErrorCode::UnknownPreset) return kExitUsage;
    return kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return 0;
}
