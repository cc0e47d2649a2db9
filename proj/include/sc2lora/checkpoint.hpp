// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sc2lora/lora.hpp"
#include "sc2lora/quant.hpp"
#include "sc2lora/tokenizer.hpp"

#include <filesystem>

namespace sc2lora {

// Checkpoint directory layout:
//   config.json     model config
//   tokenizer.json  vocabulary in id order
//   tensors.json    manifest: [{name, shape, offset, dtype: "f32" | "i8+scale", scale_offset?}]
//   tensors.bin     little-endian tensor payload
struct Checkpoint {
  Tokenizer tokenizer;
  QuantizedModel<float> model;  // no quantized entries for a dense checkpoint

  ModelParams<float> params() const { return dequantize_model(model); }
};

void save_checkpoint(const std::filesystem::path& dir, const ModelParams<float>& params, const Tokenizer& tokenizer);
void save_checkpoint(const std::filesystem::path& dir, const QuantizedModel<float>& model, const Tokenizer& tokenizer);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// Adapter directory: adapter.json (rank, alpha, seed, targets, matchup,
// tensor manifest) + adapter.bin. Independent of any base checkpoint.
void save_adapter(const std::filesystem::path& dir, const LoraAdapter<float>& adapter);
LoraAdapter<float> load_adapter(const std::filesystem::path& dir);

}  // namespace sc2lora
