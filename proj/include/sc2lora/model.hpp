// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sc2lora/lora.hpp"
#include "sc2lora/params.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sc2lora {

// Pre-norm decoder-only transformer with learned positions and GELU MLPs.
// Every entry point takes an optional adapter; adapted layers add the
// scaled low-rank path to the frozen weight.

struct TokenSequence {
  std::vector<int> ids;
  // mask[t] = 1 when token t is a prediction target (predicted from ids[<t]).
  std::vector<std::uint8_t> mask;
};

enum class Trainable {
  Adapter,  // only LoRA factors receive gradients
  Base,     // every base tensor receives gradients; adapters are ignored
};

// Logits, len(ids) x vocab_size. Throws SequenceTooLong.
template <typename T>
Matrix<T> forward(const ModelParams<T>& params, const LoraAdapter<T>* adapter, std::span<const int> ids);

template <typename T>
struct LossAndGrads {
  T loss = 0;               // mean next-token cross-entropy over masked tokens
  std::size_t tokens = 0;   // number of masked tokens
  NamedTensors<T> grads;    // d loss / d tensor for every trainable tensor
};

// Sums losses and gradients over sequences; mean() divides by the total
// masked-token count, so splitting a batch into micro-batches and adding them
// all gives the same result as one pass over the whole batch.
template <typename T>
class GradientAccumulator {
 public:
  GradientAccumulator(const ModelParams<T>& params, const LoraAdapter<T>* adapter, Trainable trainable);

  void add(const TokenSequence& seq);
  LossAndGrads<T> mean() const;
  void reset();

  T loss_sum() const { return loss_sum_; }
  std::size_t tokens() const { return tokens_; }

 private:
  const ModelParams<T>& params_;
  const LoraAdapter<T>* adapter_;
  Trainable trainable_;
  T loss_sum_ = 0;
  std::size_t tokens_ = 0;
  NamedTensors<T> grad_sum_;
};

// Throws PreconditionViolation when no token is masked, AnomalyDetected when
// the loss or a gradient is not finite.
template <typename T>
LossAndGrads<T> loss_and_grads(const ModelParams<T>& params, const LoraAdapter<T>* adapter,
                               std::span<const TokenSequence> batch, Trainable trainable = Trainable::Adapter);

// Greedy decoding. Returns the continuation without the prompt and without
// the terminating EOS. Throws SequenceTooLong if prompt + max_new exceeds the
// context.
template <typename T>
std::vector<int> generate(const ModelParams<T>& params, const LoraAdapter<T>* adapter, std::span<const int> prompt,
                          int max_new, int eos_id);

// Base-only shorthands.
template <typename T>
Matrix<T> forward(const ModelParams<T>& params, std::nullptr_t, std::span<const int> ids) {
  return forward(params, static_cast<const LoraAdapter<T>*>(nullptr), ids);
}

template <typename T>
LossAndGrads<T> loss_and_grads(const ModelParams<T>& params, std::nullptr_t, std::span<const TokenSequence> batch,
                               Trainable trainable = Trainable::Adapter) {
  return loss_and_grads(params, static_cast<const LoraAdapter<T>*>(nullptr), batch, trainable);
}

template <typename T>
std::vector<int> generate(const ModelParams<T>& params, std::nullptr_t, std::span<const int> prompt, int max_new,
                          int eos_id) {
  return generate(params, static_cast<const LoraAdapter<T>*>(nullptr), prompt, max_new, eos_id);
}

}  // namespace sc2lora
