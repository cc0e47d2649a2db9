// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sc2lora/params.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sc2lora {

struct LoraConfig {
  int rank = 8;
  double alpha = 16.0;
  LayerSelector targets = LayerSelector::default_targets();

  double scaling() const { return alpha / rank; }
  bool operator==(const LoraConfig&) const = default;
};

// Low-rank factors for each targeted linear layer W0 (d x k):
// A (r x k) and B (d x r), with delta W = (alpha / r) * B * A. The factors
// live in `tensors` as "<layer>.lora_A" / "<layer>.lora_B" so optimizers and
// gradient maps can address them by name.
template <typename T>
struct LoraAdapter {
  LoraConfig config;
  std::uint64_t seed = 0;
  std::string matchup;  // match-up the adapter was trained on, if any
  std::vector<std::string> layers;
  NamedTensors<T> tensors;

  static std::string a_name(const std::string& layer) { return layer + ".lora_A"; }
  static std::string b_name(const std::string& layer) { return layer + ".lora_B"; }

  const Matrix<T>& a(const std::string& layer) const { return tensors.at(a_name(layer)); }
  const Matrix<T>& b(const std::string& layer) const { return tensors.at(b_name(layer)); }
  bool targets(const std::string& layer) const { return tensors.contains(a_name(layer)); }
  T scaling() const { return static_cast<T>(config.scaling()); }

  template <typename U>
  LoraAdapter<U> cast() const {
    LoraAdapter<U> out;
    out.config = config;
    out.seed = seed;
    out.matchup = matchup;
    out.layers = layers;
    for (const auto& [name, m] : tensors) out.tensors.emplace(name, m.template cast<U>());
    return out;
  }
};

// One (A, B) pair per selected layer: B = 0, A ~ N(0, 1/r). Throws
// EmptySelection, RankTooLarge (r >= min(d, k)) or MissingLayer.
template <typename T>
LoraAdapter<T> attach(const ModelParams<T>& params, const LoraConfig& cfg, std::uint64_t seed);

// Column form: h = W0 X + (alpha / r) B (A X), X is k x batch.
template <typename T>
Matrix<T> lora_forward(const Matrix<T>& w0, const Matrix<T>& a, const Matrix<T>& b, double alpha, int rank,
                       const Matrix<T>& x);

// W = W0 + (alpha / r) B A for every targeted layer; other tensors copied.
template <typename T>
ModelParams<T> merge(const LoraAdapter<T>& adapter, const ModelParams<T>& params);

struct TrainableCount {
  std::size_t count = 0;
  double fraction = 0.0;  // of the base parameter count
};

// Sum over targets of r * (d + k).
template <typename T>
TrainableCount trainable_param_count(const LoraConfig& cfg, const ModelParams<T>& params);

}  // namespace sc2lora
