// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/catalog.hpp"
#include "sc2lora/errors.hpp"
#include "sc2lora/prompt.hpp"
#include "sc2lora/spatial.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <random>
#include <regex>
#include <set>

using namespace sc2lora;

namespace {

const ActionCatalog& catalog() {
  static const ActionCatalog c = ActionCatalog::load_default("full");
  return c;
}

const char* const kTable5Instruction =
    "Instruct: As an expert StarCraft II Terran player, playing against the Terran, predict the next 4 actions and "
    "also the result of the game, given the following resources:\n"
    "Game Stage: Mid, Army Count: low, Army Units/Buildings: 5 buildings\n"
    "Minerals collected: low, Minerals used: low, Vespene gas collected: low, Vespene gas used: low\n"
    "Food used: low, Food cap: low, Food for Army: low, Food for Workers: low\n"
    "Idle Workers: low, Warp gates count: low, Larva count: low.";

const char* const kTable5Output =
    "Output:\n"
    "Action 1: Research_RavenCorvidReactor_quick\n"
    "Action 2: Research_AdvancedBallistics_quick\n"
    "Action 3: Research_RavenCorvidReactor_quick\n"
    "Action 4: Research_RavenCorvidReactor_quick\n"
    "Result: win";

const std::vector<std::string> kTable5Truth = {
    "Research_RavenCorvidReactor_quick", "Research_AdvancedBallistics_quick", "Research_RavenCorvidReactor_quick",
    "Research_AdvancedBallistics_quick"};

ReplayStep low_step(double progress) {
  ReplayStep step;
  for (std::size_t f = 0; f < GlobalFeatures::kFieldCount; ++f) step.global.field(f) = 0.1;
  step.global.progress = progress;
  step.next_actions = {75, 75, 75, 75};
  return step;
}

// Independent statement of the level rule on thousandths.
std::string expected_level(int k) { return k <= 200 ? "low" : k <= 700 ? "medium" : "high"; }
std::string expected_stage(int k) { return k < 250 ? "Early" : k <= 600 ? "Mid" : k <= 900 ? "Late" : "End"; }

}  // namespace

TEST_CASE("bin_value examples and boundaries") {
  CHECK(bin_value(0.1) == CategoricalLevel::Low);
  CHECK(bin_value(0.5) == CategoricalLevel::Medium);
  CHECK(bin_value(0.71) == CategoricalLevel::High);
  CHECK(bin_value(0.0) == CategoricalLevel::Low);
  CHECK(bin_value(0.2) == CategoricalLevel::Low);
  CHECK(bin_value(std::nextafter(0.2, 1.0)) == CategoricalLevel::Medium);
  CHECK(bin_value(0.7) == CategoricalLevel::Medium);
  CHECK(bin_value(std::nextafter(0.7, 1.0)) == CategoricalLevel::High);
  CHECK(bin_value(1.0) == CategoricalLevel::High);
  CHECK_THROWS_AS(bin_value(-0.001), Error);
  CHECK_THROWS_AS(bin_value(1.001), Error);
  CHECK_THROWS_AS(bin_value(std::nan("")), Error);
}

TEST_CASE("bin_value and stage_of partition the thousandths grid") {
  for (int k = 0; k <= 1000; ++k) {
    const double v = k / 1000.0;
    CHECK(std::string(level_name(bin_value(v))) == expected_level(k));
    CHECK(std::string(stage_name(stage_of(v))) == expected_stage(k));
  }
}

TEST_CASE("stage_of examples") {
  CHECK(stage_of(0.10) == GameStage::Early);
  CHECK(stage_of(0.40) == GameStage::Mid);
  CHECK(stage_of(0.95) == GameStage::End);
  CHECK(stage_of(0.25) == GameStage::Mid);
  CHECK(stage_of(0.60) == GameStage::Mid);
  CHECK(stage_of(0.90) == GameStage::Late);
  CHECK_THROWS_AS(stage_of(1.5), Error);
}

TEST_CASE("outcome_label") {
  CHECK(outcome_label(0) == Outcome::Loss);
  CHECK(outcome_label(1) == Outcome::Win);
  try {
    outcome_label(2);
    FAIL("expected InvalidReward");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidReward);
  }
}

TEST_CASE("full catalogs have the documented sizes and are bijective") {
  CHECK(catalog().size(Race::Terran) == 75);
  CHECK(catalog().size(Race::Protoss) == 61);
  CHECK(catalog().size(Race::Zerg) == 74);
  CHECK(action_name(catalog(), Race::Terran, 75) == "Build_Reactor_Factory_quick");
  for (Race race : kAllRaces) {
    std::set<std::string> names;
    for (int id : catalog().ids(race)) {
      CHECK(action_id(catalog(), race, action_name(catalog(), race, id)) == id);
      names.insert(action_name(catalog(), race, id));
    }
    CHECK(names.size() == catalog().size(race));
  }
  try {
    action_name(catalog(), Race::Protoss, 9999);
    FAIL("expected UnknownAction");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownAction);
  }
  const ActionCatalog mini = ActionCatalog::load_default("mini");
  for (Race race : kAllRaces) CHECK(mini.size(race) == 12);
}

TEST_CASE("compile_prompt reproduces the published sample prompt") {
  const std::string text = compile_prompt(low_step(0.40), "5 buildings", {Race::Terran, Race::Terran}, 4);
  CHECK(text == kTable5Instruction);
  CHECK(text.find("Game Stage: Mid, Army Count: low") != std::string::npos);
  CHECK(text.find("Army Units/Buildings: 5 buildings") != std::string::npos);
  CHECK(compile_prompt(low_step(0.40), "5 buildings", {Race::Terran, Race::Terran}, 4) == text);
  const std::string tvz = compile_prompt(low_step(0.40), "no buildings", {Race::Terran, Race::Zerg}, 4);
  CHECK(tvz.find("Terran player, playing against the Zerg") != std::string::npos);
}

TEST_CASE("compile_prompt never shows raw feature values") {
  const auto replays = synthesize_replays({Race::Zerg, Race::Terran}, 6, 3, catalog());
  // Digits may appear only in the horizon, the building count and "StarCraft II".
  const std::regex allowed(R"(next \d+ actions|Buildings: \d+ buildings)");
  for (const auto& pair : compile_replays(replays, catalog(), {}, 4)) {
    const std::string stripped = std::regex_replace(pair.instruction, allowed, "");
    CHECK(stripped.find_first_of("0123456789") == std::string::npos);
  }
}

TEST_CASE("compile_target layout") {
  CHECK(compile_target({"A", "B"}, Outcome::Win) == "Output:\nAction 1: A\nAction 2: B\nResult: win");
  CHECK_THROWS_AS(compile_target({}, Outcome::Win), Error);
  const std::vector<std::string> generated = {
      "Research_RavenCorvidReactor_quick", "Research_AdvancedBallistics_quick", "Research_RavenCorvidReactor_quick",
      "Research_RavenCorvidReactor_quick"};
  CHECK(compile_target(generated, Outcome::Win) == kTable5Output);
  CHECK(compile_target(kTable5Truth, Outcome::Win) ==
        "Output:\nAction 1: Research_RavenCorvidReactor_quick\nAction 2: Research_AdvancedBallistics_quick\n"
        "Action 3: Research_RavenCorvidReactor_quick\nAction 4: Research_AdvancedBallistics_quick\nResult: win");
}

TEST_CASE("parse_generation on the published sample") {
  const Prediction p = parse_generation(std::string(kTable5Instruction) + "\n" + kTable5Output, 4);
  REQUIRE(p.complete());
  CHECK(*p.actions[0] == "Research_RavenCorvidReactor_quick");
  CHECK(*p.actions[1] == "Research_AdvancedBallistics_quick");
  CHECK(*p.actions[3] == "Research_RavenCorvidReactor_quick");
  CHECK(*p.outcome == Outcome::Win);
}

TEST_CASE("parse_generation degrades on partial output") {
  const Prediction empty = parse_generation("", 4);
  CHECK(empty.actions.size() == 4);
  for (const auto& a : empty.actions) CHECK_FALSE(a.has_value());
  CHECK_FALSE(empty.outcome.has_value());

  const Prediction noisy = parse_generation("garbage\nACTION 2:  X_y\nresult: LOSS\nResult: win\nAction 9: Z", 4);
  CHECK_FALSE(noisy.actions[0].has_value());
  CHECK(*noisy.actions[1] == "X_y");
  CHECK(*noisy.outcome == Outcome::Loss);
  CHECK_FALSE(noisy.complete());
}

TEST_CASE("compile_target and parse_generation round-trip") {
  std::mt19937_64 rng(5);
  const auto names = catalog().names(Race::Zerg);
  std::uniform_int_distribution<std::size_t> pick(0, names.size() - 1);
  std::uniform_int_distribution<int> len(1, 8), coin(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> actions(static_cast<std::size_t>(len(rng)));
    for (auto& a : actions) a = names[pick(rng)];
    const Outcome o = coin(rng) ? Outcome::Win : Outcome::Loss;
    const Prediction p = parse_generation(compile_target(actions, o), static_cast<int>(actions.size()));
    REQUIRE(p.complete());
    for (std::size_t k = 0; k < actions.size(); ++k) CHECK(*p.actions[k] == actions[k]);
    CHECK(*p.outcome == o);
  }
}

TEST_CASE("compile_replay and prompt-pair JSONL round-trip") {
  const auto replays = synthesize_replays({Race::Terran, Race::Terran}, 2, 4, catalog());
  const auto pairs = compile_replays(replays, catalog(), {}, 4);
  REQUIRE(pairs.size() == 6);
  for (const auto& p : pairs) {
    CHECK(p.instruction.rfind("Instruct:", 0) == 0);
    CHECK(p.target.rfind("Output:", 0) == 0);
    const auto& step = replays[static_cast<std::size_t>(p.meta.replay_index)].steps[static_cast<std::size_t>(p.meta.step_index)];
    CHECK(p.instruction.find(describe(step.spatial, {})) != std::string::npos);
    CHECK(prompt_pair_from_json(prompt_pair_to_json(p)) == p);
  }
  const auto path = std::filesystem::temp_directory_path() / "sc2lora_prompts.jsonl";
  write_prompt_pairs(pairs, path);
  CHECK(load_prompt_pairs(path) == pairs);
  CHECK(join_prompt(pairs[0].instruction, pairs[0].target) == pairs[0].instruction + "\n" + pairs[0].target);
}
