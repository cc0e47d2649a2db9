// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>

namespace sc2lora {

// Row-major dense matrix. Linear weights are stored out x in, activations
// are stored one token per row.
template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using NamedTensors = std::map<std::string, Matrix<T>>;

// Throws AnomalyDetected naming the first non-finite element (map order).
template <typename T>
void nan_guard(const NamedTensors<T>& tensors, long step = -1);

template <typename T>
void nan_guard(const std::string& name, const Matrix<T>& m, long step = -1);

// FNV-1a over the raw bytes of every tensor, names included.
template <typename T>
std::uint64_t tensor_hash(const NamedTensors<T>& tensors);

}  // namespace sc2lora
