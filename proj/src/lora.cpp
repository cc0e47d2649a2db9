// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/lora.hpp"

#include "sc2lora/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sc2lora {

namespace {

template <typename T>
std::vector<std::string> checked_targets(const ModelParams<T>& params, const LoraConfig& cfg) {
  require(cfg.rank >= 1, ErrorKind::ConfigInvalid, "LoRA rank must be >= 1");
  require(cfg.alpha > 0.0, ErrorKind::ConfigInvalid, "LoRA alpha must be > 0");
  const auto layers = cfg.targets.select(params.config);
  require(!layers.empty(), ErrorKind::EmptySelection, "selector '" + cfg.targets.str() + "' matches no layer");
  for (const auto& layer : layers) {
    const Matrix<T>& w = params.at(layer + ".weight");
    const auto min_dim = std::min(w.rows(), w.cols());
    if (cfg.rank >= min_dim) {
      throw Error(ErrorKind::RankTooLarge, "rank " + std::to_string(cfg.rank) + " >= min(d,k) = " +
                                               std::to_string(min_dim) + " for " + layer);
    }
  }
  return layers;
}

}  // namespace

template <typename T>
LoraAdapter<T> attach(const ModelParams<T>& params, const LoraConfig& cfg, std::uint64_t seed) {
  LoraAdapter<T> adapter;
  adapter.config = cfg;
  adapter.seed = seed;
  adapter.layers = checked_targets(params, cfg);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(cfg.rank)));
  for (const auto& layer : adapter.layers) {
    const Matrix<T>& w = params.at(layer + ".weight");
    Matrix<T> a(cfg.rank, w.cols());
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = static_cast<T>(normal(rng));
    adapter.tensors.emplace(LoraAdapter<T>::a_name(layer), std::move(a));
    adapter.tensors.emplace(LoraAdapter<T>::b_name(layer), Matrix<T>::Zero(w.rows(), cfg.rank));
  }
  return adapter;
}

template <typename T>
Matrix<T> lora_forward(const Matrix<T>& w0, const Matrix<T>& a, const Matrix<T>& b, double alpha, int rank,
                       const Matrix<T>& x) {
  const auto d = w0.rows();
  const auto k = w0.cols();
  if (rank < 1 || a.rows() != rank || a.cols() != k || b.rows() != d || b.cols() != rank || x.rows() != k) {
    throw Error(ErrorKind::ShapeMismatch, "lora_forward operand shapes disagree");
  }
  Matrix<T> h = w0 * x;
  const Matrix<T> ax = a * x;
  h.noalias() += static_cast<T>(alpha / rank) * (b * ax);
  return h;
}

template <typename T>
ModelParams<T> merge(const LoraAdapter<T>& adapter, const ModelParams<T>& params) {
  ModelParams<T> merged = params;
  const T scale = adapter.scaling();
  for (const auto& layer : adapter.layers) {
    auto it = merged.tensors.find(layer + ".weight");
    if (it == merged.tensors.end()) throw Error(ErrorKind::MissingLayer, "base has no layer '" + layer + "'");
    const Matrix<T>& a = adapter.a(layer);
    const Matrix<T>& b = adapter.b(layer);
    Matrix<T>& w = it->second;
    if (a.cols() != w.cols() || b.rows() != w.rows() || a.rows() != b.cols()) {
      throw Error(ErrorKind::ShapeMismatch, "adapter factors do not fit layer '" + layer + "'");
    }
    w.noalias() += scale * (b * a);
  }
  return merged;
}

template <typename T>
TrainableCount trainable_param_count(const LoraConfig& cfg, const ModelParams<T>& params) {
  TrainableCount out;
  for (const auto& layer : checked_targets(params, cfg)) {
    const Matrix<T>& w = params.at(layer + ".weight");
    out.count += static_cast<std::size_t>(cfg.rank) * static_cast<std::size_t>(w.rows() + w.cols());
  }
  out.fraction = static_cast<double>(out.count) / static_cast<double>(params.param_count());
  return out;
}

#define SC2LORA_INSTANTIATE(T)                                                                              \
  template LoraAdapter<T> attach<T>(const ModelParams<T>&, const LoraConfig&, std::uint64_t);               \
  template Matrix<T> lora_forward<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&, double, int,     \
                                     const Matrix<T>&);                                                     \
  template ModelParams<T> merge<T>(const LoraAdapter<T>&, const ModelParams<T>&);                           \
  template TrainableCount trainable_param_count<T>(const LoraConfig&, const ModelParams<T>&);

SC2LORA_INSTANTIATE(float)
SC2LORA_INSTANTIATE(double)
#undef SC2LORA_INSTANTIATE

}  // namespace sc2lora
