#include <filesystem>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "gary/error.hpp"
#include "gary/harness.hpp"
#include "gary/random.hpp"
#include "gary/session_file.hpp"
#include "oracles.hpp"

using namespace gary;

namespace {

SessionHeader header_for(const std::string& raw, Mode mode) {
  SessionHeader h;
  h.session_id = "s1";
  h.config.mode = mode;
  h.text_id = "t";
  h.title = "T";
  h.raw_text = raw;
  return h;
}

std::string recorded(std::uint64_t seed, Mode mode, std::size_t inputs) {
  Rng rng(seed);
  const std::string raw = oracle::random_text(rng, 20 + rng.below(60));
  const SessionHeader h = header_for(raw, mode);
  const Material m = prepare_material(raw, "t", "T");
  Engine e = h.make_engine();
  for (const auto& in : oracle::random_inputs(m, mode, rng, inputs)) oracle::apply(e, in);
  e.tick(e.state().clock_ms + 50);
  return serialize_session(h, e);
}

bool passes(const std::string& content) {
  try {
    return verify_session(content).pass;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CorruptLog);
    return false;
  }
}

}  // namespace

TEST(SessionFile, Layout) {
  const std::string s = recorded(1, Mode::Gary, 30);
  ASSERT_EQ(s.back(), '\n');
  const auto first = nlohmann::json::parse(s.substr(0, s.find('\n')));
  EXPECT_EQ(first["format"], "gary-session/1");
  const auto last_start = s.rfind('\n', s.size() - 2) + 1;
  const auto footer = nlohmann::json::parse(s.substr(last_start));
  EXPECT_TRUE(footer.contains("end_ms"));
  EXPECT_EQ(footer["final_state_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(footer["log_digest"].get<std::string>().size(), 16u);
}

TEST(SessionFile, HeaderRoundTrip) {
  SessionHeader h = header_for("Ciao, mondo.", Mode::Traditional);
  h.meta = {{"profile", "typical"}, {"seed", 4}};
  h.config.aoi.expansion_rms_px = 4.5;
  const SessionHeader back = nlohmann::json(h).get<SessionHeader>();
  EXPECT_EQ(nlohmann::json(back), nlohmann::json(h));
}

TEST(Replay, UnmodifiedPasses) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Mode mode = seed % 2 ? Mode::Gary : Mode::Traditional;
    const ReplayVerdict v = verify_session(recorded(seed, mode, 200));
    EXPECT_TRUE(v.pass) << v.reason;
  }
}

TEST(Replay, PerturbedTimestampFails) {
  std::string s = recorded(3, Mode::Gary, 100);
  const auto pos = s.find("\"t_ms\":", s.find('\n'));
  ASSERT_NE(pos, std::string::npos);
  auto digit = s.find_first_of("123456789", pos + 7);
  s[digit] = s[digit] == '9' ? '8' : static_cast<char>(s[digit] + 1);
  const ReplayVerdict v = verify_session(s);
  EXPECT_FALSE(v.pass);
}

TEST(Replay, ConsistentlyForgedBodyStillFails) {
  // Re-stamping the digest after editing an input is caught by replay.
  std::string s = recorded(4, Mode::Gary, 100);
  const auto body_end = s.rfind('\n', s.size() - 2) + 1;
  std::string body = s.substr(0, body_end);
  const std::string from = "\"outcome\":\"applied\"";
  const auto pos = body.find(from);
  ASSERT_NE(pos, std::string::npos);
  body.replace(pos, from.size(), "\"outcome\":\"noop\"");
  auto footer = nlohmann::json::parse(s.substr(body_end));
  footer["log_digest"] = hex64(fnv1a(body));
  const std::string forged = body + footer.dump() + "\n";
  bool pass = true;
  try {
    pass = verify_session(forged).pass;
  } catch (const Error&) {
    pass = false;
  }
  EXPECT_FALSE(pass);
}

TEST(Replay, TruncatedIsCorrupt) {
  const std::string s = recorded(5, Mode::Gary, 50);
  for (std::size_t cut : {s.size() - 1, s.size() - 10, s.size() / 2, std::size_t{3}}) {
    try {
      verify_session(s.substr(0, cut));
      FAIL() << "cut at " << cut;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::CorruptLog);
    }
  }
}

TEST(Replay, EverySingleByteMutationFails) {
  const std::string s = recorded(6, Mode::Gary, 8);
  ASSERT_LT(s.size(), 20000u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (unsigned char flip : {0x01, 0x20, 0x80}) {
      std::string m = s;
      m[i] = static_cast<char>(static_cast<unsigned char>(m[i]) ^ flip);
      ASSERT_FALSE(passes(m)) << "byte " << i << " ^ " << int(flip);
    }
  }
}

TEST(Files, WriteReadRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "gary_session_file_test";
  const std::string path = (dir / "a" / "b.txt").string();
  write_text_file(path, "abc\n");
  EXPECT_EQ(read_text_file(path), "abc\n");
  std::filesystem::remove_all(dir);
  EXPECT_THROW(read_text_file(path), Error);
}
