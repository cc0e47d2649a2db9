// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sc2lora/catalog.hpp"
#include "sc2lora/replay.hpp"
#include "sc2lora/spatial.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sc2lora {

enum class CategoricalLevel { Low, Medium, High };
enum class GameStage { Early, Mid, Late, End };
enum class Outcome { Loss, Win };

std::string_view level_name(CategoricalLevel level);  // "low", "medium", "high"
std::string_view stage_name(GameStage stage);         // "Early", "Mid", "Late", "End"
std::string_view outcome_name(Outcome outcome);       // "win", "loss"

// [0,0.2] -> Low, (0.2,0.7] -> Medium, (0.7,1] -> High. Throws OutOfRange.
CategoricalLevel bin_value(double v);
// [0,0.25) Early, [0.25,0.60] Mid, (0.60,0.90] Late, (0.90,1] End. Throws OutOfRange.
GameStage stage_of(double progress);
// 0 -> Loss, 1 -> Win. Throws InvalidReward.
Outcome outcome_label(int reward);

std::string action_name(const ActionCatalog& catalog, Race race, int id);
int action_id(const ActionCatalog& catalog, Race race, std::string_view name);

// Instruction block for one step. Every numeric feature is rendered as its
// categorical level; no trailing newline.
std::string compile_prompt(const ReplayStep& step, std::string_view building_description, const MatchUp& matchup,
                           int horizon);

// "Output:\nAction 1: A\n...\nResult: win". Throws PreconditionViolation on
// an empty action list.
std::string compile_target(const std::vector<std::string>& actions, Outcome outcome);

// Instruction and target are joined with a single newline.
std::string join_prompt(std::string_view instruction, std::string_view target);

struct Prediction {
  std::vector<std::optional<std::string>> actions;  // nullopt = no prediction
  std::optional<Outcome> outcome;

  bool complete() const;
  bool operator==(const Prediction&) const = default;
};

// Total: any text yields a Prediction with exactly `horizon` slots.
Prediction parse_generation(std::string_view text, int horizon);

struct PromptMeta {
  MatchUp matchup;
  int replay_index = 0;
  int step_index = 0;
  std::vector<std::string> actions;
  Outcome outcome = Outcome::Loss;
  bool operator==(const PromptMeta&) const = default;
};

struct PromptPair {
  std::string instruction;
  std::string target;
  PromptMeta meta;
  bool operator==(const PromptPair&) const = default;
};

// One pair per replay step, using the spatial describer for the building line.
std::vector<PromptPair> compile_replay(const Replay& replay, int replay_index, const ActionCatalog& catalog,
                                       const DescriberConfig& describer, int horizon);
std::vector<PromptPair> compile_replays(const std::vector<Replay>& replays, const ActionCatalog& catalog,
                                        const DescriberConfig& describer, int horizon);

std::string prompt_pair_to_json(const PromptPair& pair);
PromptPair prompt_pair_from_json(std::string_view line);
void write_prompt_pairs(const std::vector<PromptPair>& pairs, const std::filesystem::path& path);
std::vector<PromptPair> load_prompt_pairs(const std::filesystem::path& path);

}  // namespace sc2lora
