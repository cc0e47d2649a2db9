// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/catalog.hpp"
#include "sc2lora/errors.hpp"
#include "sc2lora/replay.hpp"

#include <catch_amalgamated.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

using namespace sc2lora;
namespace fs = std::filesystem;

namespace {

const ActionCatalog& catalog() {
  static const ActionCatalog c = ActionCatalog::load_default("full");
  return c;
}

fs::path sample_path() { return default_data_dir() / "replays" / "sample_tvt.jsonl"; }

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sc2lora_test_replay";
  fs::create_directories(dir);
  return dir / name;
}

Replay passing_replay() {
  Replay r;
  r.steps.resize(1);
  r.steps[0].next_actions = {75, 75, 75, 75};
  r.frame_count = 10000;
  r.player_apm = r.opponent_apm = 10;
  r.player_mmr = r.opponent_mmr = 1000;
  return r;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("matchup renders with one-letter codes") {
  CHECK(MatchUp{Race::Terran, Race::Zerg}.str() == "TvZ");
  CHECK(MatchUp{Race::Protoss, Race::Terran}.str() == "PvT");
  for (const char* s : {"TvT", "PvP", "ZvZ", "PvT", "PvZ", "TvZ"}) CHECK(MatchUp::parse(s).str() == s);
  CHECK_THROWS_AS(MatchUp::parse("TxZ"), Error);
}

TEST_CASE("shipped sample loads with three steps and round-trips") {
  const Replay r = load_replay(sample_path());
  CHECK(r.steps.size() == 3);
  CHECK(r.matchup.str() == "TvT");
  check_invariants(r, &catalog());
  const fs::path out = temp_file("roundtrip.jsonl");
  write_replay(r, out);
  CHECK(load_replay(out) == r);
  CHECK(parse_replay(serialize_replay(r)) == r);
}

TEST_CASE("load_replay rejects a spatial block with 12 planes") {
  std::ifstream in(sample_path());
  std::string header, step;
  std::getline(in, header);
  std::getline(in, step);
  auto j = nlohmann::json::parse(step);
  j["spatial"].erase(j["spatial"].size() - 1);
  REQUIRE(j["spatial"].size() == 12);
  CHECK(kind_of([&] { parse_replay(header + "\n" + j.dump() + "\n"); }) == ErrorKind::InvariantViolation);
}

TEST_CASE("load_replay rejects outcome 2") {
  std::ifstream in(sample_path());
  std::string header, rest, line;
  std::getline(in, header);
  while (std::getline(in, line)) rest += line + "\n";
  auto h = nlohmann::json::parse(header);
  h["outcome"] = 2;
  CHECK(kind_of([&] { parse_replay(h.dump() + "\n" + rest); }) == ErrorKind::InvariantViolation);
}

TEST_CASE("malformed replay files report the line number") {
  const std::string text = serialize_replay(synthesize_replays({Race::Terran, Race::Terran}, 1, 3, catalog())[0]);
  const auto second_break = text.find('\n', text.find('\n') + 1);
  const std::string broken = text.substr(0, second_break + 1) + "{\"progress\": \"late\"}\n";
  try {
    parse_replay(broken, "mem");
    FAIL("expected MalformedFile");
  } catch (const MalformedFile& e) {
    CHECK(e.line() == 3);
  }
  CHECK(kind_of([] { parse_replay("not json\n"); }) == ErrorKind::MalformedFile);
}

TEST_CASE("validate_replay thresholds") {
  CHECK(validate_replay(passing_replay()).passed);

  Replay r = passing_replay();
  r.frame_count = 9999;
  auto res = validate_replay(r);
  CHECK_FALSE(res.passed);
  CHECK(res.reasons == std::vector<std::string>{"min_frames"});

  r = passing_replay();
  r.opponent_mmr = 999;
  res = validate_replay(r);
  CHECK_FALSE(res.passed);
  CHECK(res.reasons == std::vector<std::string>{"min_mmr"});

  r = passing_replay();
  r.player_apm = 9;
  r.frame_count = 1;
  res = validate_replay(r);
  CHECK(res.reasons == std::vector<std::string>{"min_frames", "min_apm"});
}

TEST_CASE("validate_replay is monotone in its thresholds") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> small(0, 30), mmr(900, 1100);
  std::uniform_int_distribution<std::int64_t> frames(9000, 11000);
  for (int trial = 0; trial < 2000; ++trial) {
    Replay r = passing_replay();
    r.frame_count = frames(rng);
    r.player_apm = small(rng);
    r.opponent_apm = small(rng);
    r.player_mmr = mmr(rng);
    r.opponent_mmr = mmr(rng);
    ValidationCriteria strict{frames(rng), small(rng), mmr(rng)};
    ValidationCriteria loose = strict;
    loose.min_frames -= small(rng);
    loose.min_apm -= small(rng);
    loose.min_mmr -= small(rng);
    if (validate_replay(r, strict).passed) CHECK(validate_replay(r, loose).passed);
  }
}

TEST_CASE("synthesize_replays is deterministic and valid") {
  const MatchUp tvt{Race::Terran, Race::Terran};
  const auto a = synthesize_replays(tvt, 10, 7, catalog());
  const auto b = synthesize_replays(tvt, 10, 7, catalog());
  REQUIRE(a.size() == 10);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(serialize_replay(a[i]) == serialize_replay(b[i]));
  for (const auto& r : a) {
    check_invariants(r, &catalog());
    CHECK(validate_replay(r).passed);
  }
  CHECK(serialize_replay(synthesize_replays(tvt, 1, 8, catalog())[0]) != serialize_replay(a[0]));
}

TEST_CASE("synthesize_replays balances outcomes") {
  const auto z = synthesize_replays({Race::Zerg, Race::Zerg}, 4, 1, catalog());
  CHECK(std::count_if(z.begin(), z.end(), [](const Replay& r) { return r.outcome == 1; }) == 2);
  for (int n = 1; n <= 9; ++n) {
    const auto rs = synthesize_replays({Race::Protoss, Race::Terran}, n, static_cast<std::uint64_t>(n), catalog());
    const auto wins = std::count_if(rs.begin(), rs.end(), [](const Replay& r) { return r.outcome == 1; });
    CHECK(std::abs(2 * wins - n) <= 1);
  }
}

TEST_CASE("synthesized actions come from the player catalog") {
  const auto p = synthesize_replays({Race::Protoss, Race::Protoss}, 1, 0, catalog());
  for (const auto& step : p[0].steps) {
    for (int id : step.next_actions) CHECK(catalog().contains(Race::Protoss, id));
  }
  const auto tz = synthesize_replays({Race::Terran, Race::Zerg}, 3, 2, catalog());
  for (const auto& r : tz) {
    for (const auto& step : r.steps) {
      for (int id : step.next_actions) CHECK(catalog().contains(Race::Terran, id));
    }
  }
}

TEST_CASE("synthesized progress is non-decreasing and features stay in range") {
  SynthesisOptions opts;
  opts.steps_per_replay = 6;
  for (const auto& r : synthesize_replays({Race::Zerg, Race::Protoss}, 5, 4, catalog(), opts)) {
    REQUIRE(r.steps.size() == 6);
    for (std::size_t s = 1; s < r.steps.size(); ++s) {
      CHECK(r.steps[s].global.progress >= r.steps[s - 1].global.progress);
    }
    for (const auto& step : r.steps) {
      for (std::size_t f = 0; f < GlobalFeatures::kFieldCount; ++f) {
        CHECK(step.global.field(f) >= 0.0);
        CHECK(step.global.field(f) <= 1.0);
      }
    }
  }
}

TEST_CASE("subset_replays samples without replacement") {
  std::vector<Replay> pool(4897);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i].frame_count = static_cast<std::int64_t>(i);
  const auto sub = subset_replays(pool, 1000, 3);
  REQUIRE(sub.size() == 1000);
  std::set<std::int64_t> ids;
  for (const auto& r : sub) ids.insert(r.frame_count);
  CHECK(ids.size() == 1000);
  CHECK(subset_replays(pool, 1000, 3) == sub);

  const auto perm = subset_replays(pool, pool.size(), 9);
  std::vector<std::int64_t> got;
  for (const auto& r : perm) got.push_back(r.frame_count);
  std::sort(got.begin(), got.end());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == static_cast<std::int64_t>(i));

  CHECK(kind_of([&] { subset_replays(pool, pool.size() + 1, 0); }) == ErrorKind::InsufficientReplays);
}

TEST_CASE("replay directories round-trip") {
  const auto rs = synthesize_replays({Race::Terran, Race::Protoss}, 3, 5, catalog());
  const fs::path dir = fs::temp_directory_path() / "sc2lora_test_replay" / "dir";
  fs::remove_all(dir);
  write_replay_dir(rs, dir);
  CHECK(load_replay_dir(dir) == rs);
}
