// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sc2lora/tensor.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sc2lora {

struct ModelConfig {
  int n_layers = 4;
  int d_model = 128;
  int n_heads = 4;
  int d_ff = 512;
  int vocab_size = 0;
  int max_seq_len = 288;

  int head_dim() const { return d_model / n_heads; }
  void validate() const;  // throws ConfigInvalid
  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Adaptable linear layers inside each block. A linear layer "layers.2.attn.q"
// owns the tensors "layers.2.attn.q.weight" (out x in) and ".bias" (1 x out).
inline constexpr std::array<std::string_view, 6> kLinearKinds = {"attn.q", "attn.k",  "attn.v",
                                                                "attn.out", "ff.up", "ff.down"};

std::string linear_name(int layer, std::string_view kind);
std::vector<std::string> linear_layer_names(const ModelConfig& config);

// Picks linear layers by kind and (optionally) block index.
struct LayerSelector {
  std::vector<std::string> kinds;
  std::vector<int> layers;  // empty selects every block

  static LayerSelector attention();        // q, k, v, out
  static LayerSelector default_targets();  // q, k, v, out, ff.up
  static LayerSelector all_linear();
  // "attention", "default", "all", or a comma list of kinds, optionally
  // followed by "@" and a comma list of block indices ("attn.q,ff.up@0,3").
  static LayerSelector parse(std::string_view spec);
  std::string str() const;

  bool matches(std::string_view linear) const;
  std::vector<std::string> select(const ModelConfig& config) const;
  bool operator==(const LayerSelector&) const = default;
};

template <typename T>
struct ModelParams {
  ModelConfig config;
  NamedTensors<T> tensors;

  // Weights ~ N(0, 0.02), residual projections scaled by 1/sqrt(2 n_layers),
  // zero biases, unit layer-norm gains.
  static ModelParams init(const ModelConfig& config, std::uint64_t seed);

  const Matrix<T>& at(const std::string& name) const;  // throws MissingLayer
  Matrix<T>& at(const std::string& name);
  std::size_t param_count() const;

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    out.config = config;
    for (const auto& [name, m] : tensors) out.tensors.emplace(name, m.template cast<U>());
    return out;
  }
};

// Expected shape of every tensor, keyed by name.
std::map<std::string, std::pair<int, int>> expected_shapes(const ModelConfig& config);

}  // namespace sc2lora
