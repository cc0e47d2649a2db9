// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sc2lora/lora.hpp"
#include "sc2lora/params.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace sc2lora {

// Symmetric per-row int8: scale_i = max(max_j |W_ij|, eps) / 127,
// q_ij = round(W_ij / scale_i) in [-127, 127].
template <typename T>
struct QuantizedTensor {
  static constexpr double kEps = 1e-12;
  int rows = 0;
  int cols = 0;
  std::vector<std::int8_t> q;  // row-major
  std::vector<T> scales;       // one per row
  bool operator==(const QuantizedTensor&) const = default;
};

template <typename T>
QuantizedTensor<T> quantize8(const Matrix<T>& w);  // throws NonFiniteInput

template <typename T>
Matrix<T> dequantize(const QuantizedTensor<T>& qt);

// A base model whose selected linear weights are held in int8.
template <typename T>
struct QuantizedModel {
  ModelConfig config;
  NamedTensors<T> dense;                               // everything not quantized
  std::map<std::string, QuantizedTensor<T>> quantized;  // keyed by tensor name

  std::size_t param_count() const;
};

// Quantizes "<layer>.weight" of every selected linear layer.
template <typename T>
QuantizedModel<T> quantize_model(const ModelParams<T>& params, const LayerSelector& selector);

template <typename T>
ModelParams<T> dequantize_model(const QuantizedModel<T>& model);

// Dequantize-on-use forward: identical to forward(dequantize_model(model)).
template <typename T>
Matrix<T> quantized_forward(const QuantizedModel<T>& model, const LoraAdapter<T>* adapter, std::span<const int> ids);

}  // namespace sc2lora
