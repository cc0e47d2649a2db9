// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sc2lora/catalog.hpp"
#include "sc2lora/trainer.hpp"

#include <cstdint>
#include <vector>

namespace sc2lora {

// Vocabulary covering the prompt template for every match-up, every
// catalog action name and the text corpus.
Tokenizer build_vocabulary(const ActionCatalog& catalog, const std::vector<QAPair>& corpus);

// Desk stand-in for a pretrained base model: full-parameter language
// modelling on the text corpus plus prompts compiled from synthetic replays
// of all nine match-ups (actions random, so no test answer is learnable).
struct BaseSpec {
  ModelConfig model;  // vocab_size is taken from the tokenizer
  TrainConfig train;
  int replays_per_matchup = 4;
  int steps_per_replay = 3;
  std::uint64_t init_seed = 0;
  std::uint64_t data_seed = 0xba5e;
};

struct PretrainedBase {
  Tokenizer tokenizer;
  ModelParams<float> params;
  TrainLog log;
};

std::vector<TokenSequence> base_pretraining_data(const Tokenizer& tokenizer, const ActionCatalog& catalog,
                                                 const std::vector<QAPair>& corpus, const BaseSpec& spec);

// Defaults for the three training runs at desk scale.
TrainConfig default_base_train_config();
TrainConfig default_stage1_config();
TrainConfig default_stage2_config();

PretrainedBase build_base(const ActionCatalog& catalog, const std::vector<QAPair>& corpus, const BaseSpec& spec);

}  // namespace sc2lora
