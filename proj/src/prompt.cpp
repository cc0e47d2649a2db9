// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/prompt.hpp"

#include "sc2lora/errors.hpp"
#include "sc2lora/spatial.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

namespace sc2lora {

std::string_view level_name(CategoricalLevel level) {
  switch (level) {
    case CategoricalLevel::Low: return "low";
    case CategoricalLevel::Medium: return "medium";
    case CategoricalLevel::High: return "high";
  }
  return "?";
}

std::string_view stage_name(GameStage stage) {
  switch (stage) {
    case GameStage::Early: return "Early";
    case GameStage::Mid: return "Mid";
    case GameStage::Late: return "Late";
    case GameStage::End: return "End";
  }
  return "?";
}

std::string_view outcome_name(Outcome outcome) { return outcome == Outcome::Win ? "win" : "loss"; }

CategoricalLevel bin_value(double v) {
  if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
    throw Error(ErrorKind::OutOfRange, "feature value " + std::to_string(v) + " outside [0,1]");
  }
  if (v <= 0.2) return CategoricalLevel::Low;
  if (v <= 0.7) return CategoricalLevel::Medium;
  return CategoricalLevel::High;
}

GameStage stage_of(double progress) {
  if (!std::isfinite(progress) || progress < 0.0 || progress > 1.0) {
    throw Error(ErrorKind::OutOfRange, "progress " + std::to_string(progress) + " outside [0,1]");
  }
  if (progress < 0.25) return GameStage::Early;
  if (progress <= 0.60) return GameStage::Mid;
  if (progress <= 0.90) return GameStage::Late;
  return GameStage::End;
}

Outcome outcome_label(int reward) {
  if (reward == 0) return Outcome::Loss;
  if (reward == 1) return Outcome::Win;
  throw Error(ErrorKind::InvalidReward, "reward must be 0 or 1, got " + std::to_string(reward));
}

std::string action_name(const ActionCatalog& catalog, Race race, int id) { return catalog.action_name(race, id); }

int action_id(const ActionCatalog& catalog, Race race, std::string_view name) { return catalog.action_id(race, name); }

std::string compile_prompt(const ReplayStep& step, std::string_view building_description, const MatchUp& matchup,
                           int horizon) {
  require(horizon >= 1, ErrorKind::PreconditionViolation, "horizon must be >= 1");
  const GlobalFeatures& g = step.global;
  auto lvl = [](double v) { return level_name(bin_value(v)); };
  std::ostringstream out;
  out << "Instruct: As an expert StarCraft II " << race_name(matchup.player) << " player, playing against the "
      << race_name(matchup.opponent) << ", predict the next " << horizon
      << " actions and also the result of the game, given the following resources:\n";
  out << "Game Stage: " << stage_name(stage_of(g.progress)) << ", Army Count: " << lvl(g.army_count)
      << ", Army Units/Buildings: " << building_description << "\n";
  out << "Minerals collected: " << lvl(g.minerals_collected) << ", Minerals used: " << lvl(g.minerals_used)
      << ", Vespene gas collected: " << lvl(g.vespene_collected) << ", Vespene gas used: " << lvl(g.vespene_used)
      << "\n";
  out << "Food used: " << lvl(g.food_used) << ", Food cap: " << lvl(g.food_cap)
      << ", Food for Army: " << lvl(g.food_army) << ", Food for Workers: " << lvl(g.food_workers) << "\n";
  out << "Idle Workers: " << lvl(g.idle_workers) << ", Warp gates count: " << lvl(g.warp_gates)
      << ", Larva count: " << lvl(g.larva) << ".";
  return out.str();
}

std::string compile_target(const std::vector<std::string>& actions, Outcome outcome) {
  require(!actions.empty(), ErrorKind::PreconditionViolation, "compile_target needs at least one action");
  std::string out = "Output:";
  for (std::size_t k = 0; k < actions.size(); ++k) {
    out += "\nAction " + std::to_string(k + 1) + ": " + actions[k];
  }
  out += "\nResult: ";
  out += outcome_name(outcome);
  return out;
}

std::string join_prompt(std::string_view instruction, std::string_view target) {
  std::string out(instruction);
  out += '\n';
  out += target;
  return out;
}

bool Prediction::complete() const {
  if (!outcome) return false;
  for (const auto& a : actions) {
    if (!a) return false;
  }
  return true;
}

Prediction parse_generation(std::string_view text, int horizon) {
  static const std::regex action_re(R"(^\s*action\s+(\d+)\s*:\s*(\S+))", std::regex::icase);
  static const std::regex result_re(R"(^\s*result\s*:\s*(win|loss)\b)", std::regex::icase);

  Prediction pred;
  pred.actions.assign(static_cast<std::size_t>(std::max(horizon, 0)), std::nullopt);
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    std::smatch m;
    if (std::regex_search(line, m, action_re)) {
      const std::string digits = m[1].str();
      if (digits.size() > 6) continue;
      const int k = std::stoi(digits);
      if (k >= 1 && k <= horizon && !pred.actions[static_cast<std::size_t>(k - 1)]) {
        pred.actions[static_cast<std::size_t>(k - 1)] = m[2].str();
      }
    } else if (!pred.outcome && std::regex_search(line, m, result_re)) {
      std::string word = m[1].str();
      for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      pred.outcome = word == "win" ? Outcome::Win : Outcome::Loss;
    }
    if (end == text.size()) break;
  }
  return pred;
}

std::vector<PromptPair> compile_replay(const Replay& replay, int replay_index, const ActionCatalog& catalog,
                                       const DescriberConfig& describer, int horizon) {
  require(horizon >= 1, ErrorKind::PreconditionViolation, "horizon must be >= 1");
  const Outcome outcome = outcome_label(replay.outcome);
  std::vector<PromptPair> pairs;
  pairs.reserve(replay.steps.size());
  for (std::size_t s = 0; s < replay.steps.size(); ++s) {
    const ReplayStep& step = replay.steps[s];
    require(step.next_actions.size() >= static_cast<std::size_t>(horizon), ErrorKind::PreconditionViolation,
            "step " + std::to_string(s) + " has fewer than " + std::to_string(horizon) + " next actions");
    PromptPair pair;
    pair.meta.matchup = replay.matchup;
    pair.meta.replay_index = replay_index;
    pair.meta.step_index = static_cast<int>(s);
    pair.meta.outcome = outcome;
    for (int k = 0; k < horizon; ++k) {
      pair.meta.actions.push_back(catalog.action_name(replay.matchup.player, step.next_actions[static_cast<std::size_t>(k)]));
    }
    pair.instruction = compile_prompt(step, describe(step.spatial, describer), replay.matchup, horizon);
    pair.target = compile_target(pair.meta.actions, outcome);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::vector<PromptPair> compile_replays(const std::vector<Replay>& replays, const ActionCatalog& catalog,
                                        const DescriberConfig& describer, int horizon) {
  std::vector<PromptPair> out;
  for (std::size_t i = 0; i < replays.size(); ++i) {
    auto pairs = compile_replay(replays[i], static_cast<int>(i), catalog, describer, horizon);
    out.insert(out.end(), std::make_move_iterator(pairs.begin()), std::make_move_iterator(pairs.end()));
  }
  return out;
}

std::string prompt_pair_to_json(const PromptPair& pair) {
  nlohmann::json meta = {{"matchup", pair.meta.matchup.str()},
                         {"replay_index", pair.meta.replay_index},
                         {"step_index", pair.meta.step_index},
                         {"actions", pair.meta.actions},
                         {"outcome", std::string(outcome_name(pair.meta.outcome))}};
  nlohmann::json obj = {{"instruction", pair.instruction}, {"target", pair.target}, {"meta", meta}};
  return obj.dump();
}

PromptPair prompt_pair_from_json(std::string_view line) {
  const auto obj = nlohmann::json::parse(line);
  PromptPair pair;
  pair.instruction = obj.at("instruction").get<std::string>();
  pair.target = obj.at("target").get<std::string>();
  const auto& meta = obj.at("meta");
  pair.meta.matchup = MatchUp::parse(meta.at("matchup").get<std::string>());
  pair.meta.replay_index = meta.at("replay_index").get<int>();
  pair.meta.step_index = meta.at("step_index").get<int>();
  pair.meta.actions = meta.at("actions").get<std::vector<std::string>>();
  const std::string outcome = meta.at("outcome").get<std::string>();
  if (outcome != "win" && outcome != "loss") throw Error(ErrorKind::InvalidReward, "outcome '" + outcome + "'");
  pair.meta.outcome = outcome == "win" ? Outcome::Win : Outcome::Loss;
  return pair;
}

void write_prompt_pairs(const std::vector<PromptPair>& pairs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& p : pairs) out << prompt_pair_to_json(p) << '\n';
}

std::vector<PromptPair> load_prompt_pairs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<PromptPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      pairs.push_back(prompt_pair_from_json(line));
    } catch (const nlohmann::json::exception& e) {
      throw MalformedFile(path.string(), line_no, e.what());
    }
  }
  return pairs;
}

}  // namespace sc2lora
