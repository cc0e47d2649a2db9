// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sc2lora/lora.hpp"
#include "sc2lora/model.hpp"
#include "sc2lora/prompt.hpp"
#include "sc2lora/tokenizer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sc2lora {

struct TrainConfig {
  double peak_lr = 2e-3;
  int epochs = 1;
  int warmup_steps = 1;
  int grad_accum_steps = 8;
  int batch_size = 1;
  int max_tokens = 288;
  std::uint64_t seed = 0;
  LoraConfig lora;
  bool quantize_base = false;

  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;  // throws ConfigInvalid
};

// Linear warmup to peak_lr, then cosine decay to zero at total_steps.
double lr_at(long step, long total_steps, const TrainConfig& cfg);

template <typename T>
struct AdamWState {
  NamedTensors<T> m;
  NamedTensors<T> v;
};

// One AdamW update (bias-corrected, decoupled weight decay) of every tensor
// in `grads`. `step` counts from 1. Throws AnomalyDetected on a non-finite
// gradient before touching any parameter.
template <typename T>
void adamw_step(NamedTensors<T>& params, const NamedTensors<T>& grads, AdamWState<T>& state, long step, double lr,
                double beta1, double beta2, double eps, double weight_decay);

struct QAPair {
  std::string question;
  std::string answer;
};

std::vector<QAPair> load_qa_corpus(const std::filesystem::path& path);  // JSONL {"question","answer"}
std::string render_question(const std::string& question);               // "Instruct: ..."
std::string render_answer(const std::string& answer);                   // "Output: ..."

// BOS + instruction + "\n" + target + EOS, masked on target and EOS. When
// longer than max_tokens the target tail is cut; throws SequenceTooLong if
// not a single target token survives.
TokenSequence build_sequence(const Tokenizer& tokenizer, const std::string& instruction, const std::string& target,
                             int max_tokens);

// Prompt part only (BOS + instruction + "\n"), as fed to generate().
std::vector<int> encode_prompt(const Tokenizer& tokenizer, const std::string& instruction);

struct LogEntry {
  long step = 0;  // 0-based optimizer step
  double lr = 0.0;
  double loss = 0.0;
};

struct TrainLog {
  std::vector<LogEntry> entries;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
  long total_steps = 0;

  void write_csv(const std::filesystem::path& path) const;
  void write_summary(const std::filesystem::path& path) const;
};

long total_steps(std::size_t n_examples, const TrainConfig& cfg);

struct AdapterRun {
  LoraAdapter<float> adapter;
  TrainLog log;
};

struct BaseRun {
  ModelParams<float> params;
  TrainLog log;
};

// Generic loop: attaches a fresh adapter per cfg.lora and trains it on the
// sequences. The base is never modified.
AdapterRun train_adapter(const ModelParams<float>& base, const std::vector<TokenSequence>& data,
                         const TrainConfig& cfg);

AdapterRun train_stage1(const ModelParams<float>& base, const Tokenizer& tokenizer, const std::vector<QAPair>& corpus,
                        const TrainConfig& cfg);

// All pairs must share one match-up; the adapter records it.
AdapterRun train_stage2(const ModelParams<float>& merged_stage1, const Tokenizer& tokenizer,
                        const std::vector<PromptPair>& corpus, const TrainConfig& cfg);

// Full-parameter training of the base itself (no adapter); cfg.lora and
// cfg.quantize_base are ignored.
BaseRun pretrain_base(const ModelParams<float>& init, const std::vector<TokenSequence>& data, const TrainConfig& cfg);

}  // namespace sc2lora
