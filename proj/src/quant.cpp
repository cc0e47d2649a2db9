// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/quant.hpp"

#include "sc2lora/errors.hpp"
#include "sc2lora/model.hpp"

#include <algorithm>
#include <cmath>

namespace sc2lora {

template <typename T>
QuantizedTensor<T> quantize8(const Matrix<T>& w) {
  QuantizedTensor<T> qt;
  qt.rows = static_cast<int>(w.rows());
  qt.cols = static_cast<int>(w.cols());
  qt.q.resize(static_cast<std::size_t>(w.size()));
  qt.scales.resize(static_cast<std::size_t>(w.rows()));
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    T max_abs = 0;
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      const T v = w(r, c);
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::NonFiniteInput, "non-finite weight at (" + std::to_string(r) + ", " + std::to_string(c) + ")");
      }
      max_abs = std::max(max_abs, std::abs(v));
    }
    const T scale = std::max(max_abs, static_cast<T>(QuantizedTensor<T>::kEps)) / static_cast<T>(127);
    qt.scales[static_cast<std::size_t>(r)] = scale;
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      const T level = std::clamp(std::round(w(r, c) / scale), static_cast<T>(-127), static_cast<T>(127));
      qt.q[static_cast<std::size_t>(r * w.cols() + c)] = static_cast<std::int8_t>(level);
    }
  }
  return qt;
}

template <typename T>
Matrix<T> dequantize(const QuantizedTensor<T>& qt) {
  Matrix<T> w(qt.rows, qt.cols);
  for (int r = 0; r < qt.rows; ++r) {
    const T scale = qt.scales[static_cast<std::size_t>(r)];
    for (int c = 0; c < qt.cols; ++c) {
      w(r, c) = static_cast<T>(qt.q[static_cast<std::size_t>(r) * qt.cols + c]) * scale;
    }
  }
  return w;
}

template <typename T>
std::size_t QuantizedModel<T>::param_count() const {
  std::size_t n = 0;
  for (const auto& [name, m] : dense) n += static_cast<std::size_t>(m.size());
  for (const auto& [name, q] : quantized) n += q.q.size();
  return n;
}

template <typename T>
QuantizedModel<T> quantize_model(const ModelParams<T>& params, const LayerSelector& selector) {
  QuantizedModel<T> model;
  model.config = params.config;
  model.dense = params.tensors;
  for (const auto& layer : selector.select(params.config)) {
    const std::string name = layer + ".weight";
    auto it = model.dense.find(name);
    if (it == model.dense.end()) throw Error(ErrorKind::MissingLayer, "no tensor named '" + name + "'");
    model.quantized.emplace(name, quantize8(it->second));
    model.dense.erase(it);
  }
  return model;
}

template <typename T>
ModelParams<T> dequantize_model(const QuantizedModel<T>& model) {
  ModelParams<T> params;
  params.config = model.config;
  params.tensors = model.dense;
  for (const auto& [name, qt] : model.quantized) params.tensors.emplace(name, dequantize(qt));
  return params;
}

template <typename T>
Matrix<T> quantized_forward(const QuantizedModel<T>& model, const LoraAdapter<T>* adapter, std::span<const int> ids) {
  return forward(dequantize_model(model), adapter, ids);
}

#define SC2LORA_INSTANTIATE(T)                                                                     \
  template QuantizedTensor<T> quantize8<T>(const Matrix<T>&);                                      \
  template Matrix<T> dequantize<T>(const QuantizedTensor<T>&);                                     \
  template struct QuantizedModel<T>;                                                               \
  template QuantizedModel<T> quantize_model<T>(const ModelParams<T>&, const LayerSelector&);       \
  template ModelParams<T> dequantize_model<T>(const QuantizedModel<T>&);                           \
  template Matrix<T> quantized_forward<T>(const QuantizedModel<T>&, const LoraAdapter<T>*, std::span<const int>);

SC2LORA_INSTANTIATE(float)
SC2LORA_INSTANTIATE(double)
#undef SC2LORA_INSTANTIATE

}  // namespace sc2lora
