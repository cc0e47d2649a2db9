// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/pipeline.hpp"

#include "sc2lora/errors.hpp"
#include "sc2lora/spatial.hpp"

namespace sc2lora {

namespace {

const Race kRaces[] = {Race::Terran, Race::Protoss, Race::Zerg};

}  // namespace

Tokenizer build_vocabulary(const ActionCatalog& catalog, const std::vector<QAPair>& corpus) {
  std::vector<std::string> texts;
  for (Race player : kRaces) {
    for (Race opponent : kRaces) {
      const MatchUp m{player, opponent};
      SynthesisOptions opts;
      opts.steps_per_replay = 1;
      for (const auto& pair : compile_replays(synthesize_replays(m, 1, 0, catalog, opts), catalog, {}, 4)) {
        texts.push_back(pair.instruction);
        texts.push_back(pair.target);
      }
    }
    for (const auto& name : catalog.names(player)) texts.push_back(" " + name);
  }
  for (GameStage s : {GameStage::Early, GameStage::Mid, GameStage::Late, GameStage::End}) {
    texts.push_back(" " + std::string(stage_name(s)));
  }
  for (CategoricalLevel l : {CategoricalLevel::Low, CategoricalLevel::Medium, CategoricalLevel::High}) {
    texts.push_back(" " + std::string(level_name(l)));
  }
  texts.push_back(" win loss no buildings");
  for (const auto& qa : corpus) {
    texts.push_back(render_question(qa.question));
    texts.push_back(render_answer(qa.answer));
  }
  return Tokenizer::build(texts);
}

std::vector<TokenSequence> base_pretraining_data(const Tokenizer& tokenizer, const ActionCatalog& catalog,
                                                 const std::vector<QAPair>& corpus, const BaseSpec& spec) {
  const int max_tokens = std::min(spec.train.max_tokens, spec.model.max_seq_len);
  std::vector<TokenSequence> data;
  for (const auto& qa : corpus) {
    data.push_back(build_sequence(tokenizer, render_question(qa.question), render_answer(qa.answer), max_tokens));
  }
  std::uint64_t seed = spec.data_seed;
  SynthesisOptions opts;
  opts.steps_per_replay = spec.steps_per_replay;
  for (Race player : kRaces) {
    for (Race opponent : kRaces) {
      const auto replays = synthesize_replays({player, opponent}, spec.replays_per_matchup, seed++, catalog, opts);
      for (const auto& pair : compile_replays(replays, catalog, {}, opts.horizon)) {
        data.push_back(build_sequence(tokenizer, pair.instruction, pair.target, max_tokens));
      }
    }
  }
  // Plain language modelling: every token after BOS is a target.
  for (auto& seq : data) {
    std::fill(seq.mask.begin(), seq.mask.end(), std::uint8_t{1});
    seq.mask.front() = 0;
  }
  return data;
}

TrainConfig default_base_train_config() {
  TrainConfig cfg;
  cfg.peak_lr = 3e-3;
  cfg.epochs = 30;
  cfg.warmup_steps = 10;
  cfg.batch_size = 4;
  cfg.grad_accum_steps = 2;
  cfg.weight_decay = 0.01;
  return cfg;
}

TrainConfig default_stage1_config() {
  TrainConfig cfg;
  cfg.peak_lr = 2e-3;
  cfg.epochs = 2;
  cfg.warmup_steps = 1;
  cfg.batch_size = 1;
  cfg.grad_accum_steps = 8;
  cfg.lora = LoraConfig{16, 32.0, LayerSelector::default_targets()};
  return cfg;
}

TrainConfig default_stage2_config() {
  TrainConfig cfg;
  cfg.peak_lr = 2e-3;
  cfg.epochs = 80;
  cfg.warmup_steps = 48;
  cfg.batch_size = 4;
  cfg.grad_accum_steps = 1;
  cfg.lora = LoraConfig{16, 32.0, LayerSelector::default_targets()};
  return cfg;
}

PretrainedBase build_base(const ActionCatalog& catalog, const std::vector<QAPair>& corpus, const BaseSpec& spec) {
  PretrainedBase out;
  out.tokenizer = build_vocabulary(catalog, corpus);
  ModelConfig config = spec.model;
  config.vocab_size = out.tokenizer.vocab_size();
  config.validate();
  const auto data = base_pretraining_data(out.tokenizer, catalog, corpus, spec);
  BaseRun run = pretrain_base(ModelParams<float>::init(config, spec.init_seed), data, spec.train);
  out.params = std::move(run.params);
  out.log = std::move(run.log);
  return out;
}

}  // namespace sc2lora
