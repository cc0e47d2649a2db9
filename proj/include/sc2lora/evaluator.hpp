// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sc2lora/catalog.hpp"
#include "sc2lora/lora.hpp"
#include "sc2lora/prompt.hpp"
#include "sc2lora/replay.hpp"
#include "sc2lora/spatial.hpp"
#include "sc2lora/tokenizer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sc2lora {

// Positional exact match over the horizon; a missing action is a miss.
// Throws HorizonMismatch when pred and truth disagree on the horizon.
double build_order_accuracy(const Prediction& pred, const std::vector<std::string>& truth);

// Fraction of predictions whose outcome equals the truth. Throws
// LengthMismatch, or PreconditionViolation on empty input.
double global_state_accuracy(const std::vector<Prediction>& preds, const std::vector<Outcome>& truths);

struct EvalConfig {
  int horizon = 4;
  int max_new_tokens = 48;
  int max_steps = 0;  // 0 evaluates every step; otherwise a seeded sample
  std::uint64_t seed = 0;
  int threads = 1;
  DescriberConfig describer;

  void validate() const;  // throws ConfigInvalid
};

struct StepResult {
  int replay_index = 0;
  int step_index = 0;
  std::vector<std::uint8_t> action_hits;
  bool outcome_hit = false;
  bool parse_ok = false;
  std::string generation;
};

struct EvalReport {
  std::string matchup;
  double gs_accuracy = 0.0;
  double bo_accuracy = 0.0;
  std::size_t n_steps = 0;
  std::vector<double> per_action_position_accuracy;
  double parse_failure_rate = 0.0;
  std::string adapter_matchup;  // empty without adapter
  std::uint64_t adapter_hash = 0;
  std::vector<StepResult> steps;

  std::string to_json() const;
  void write_json(const std::filesystem::path& path) const;
  void write_csv(const std::filesystem::path& path) const;  // one row per step
};

// describe -> compile -> generate (greedy) -> parse -> score for every
// selected step of `replays`, which must share one match-up.
EvalReport evaluate(const ModelParams<float>& params, const LoraAdapter<float>* adapter, const Tokenizer& tokenizer,
                    const std::vector<Replay>& replays, const ActionCatalog& catalog, const EvalConfig& cfg);

// Same pipeline with an adapter trained on another match-up. Throws
// SameMatchup, and InvariantViolation if the adapter changed.
EvalReport zero_shot_eval(const ModelParams<float>& params, const LoraAdapter<float>& adapter,
                          const Tokenizer& tokenizer, const std::vector<Replay>& replays, const ActionCatalog& catalog,
                          const EvalConfig& cfg);

}  // namespace sc2lora
