// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/errors.hpp"
#include "sc2lora/tensor.hpp"

#include <cmath>
#include <cstring>

namespace sc2lora {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedFile: return "MalformedFile";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::InsufficientReplays: return "InsufficientReplays";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::InvalidReward: return "InvalidReward";
    case ErrorKind::UnknownAction: return "UnknownAction";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::SequenceTooLong: return "SequenceTooLong";
    case ErrorKind::AnomalyDetected: return "AnomalyDetected";
    case ErrorKind::PreconditionViolation: return "PreconditionViolation";
    case ErrorKind::RankTooLarge: return "RankTooLarge";
    case ErrorKind::EmptySelection: return "EmptySelection";
    case ErrorKind::MissingLayer: return "MissingLayer";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::HorizonMismatch: return "HorizonMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::SameMatchup: return "SameMatchup";
    case ErrorKind::Io: return "Io";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
  }
  return "Error";
}

template <typename T>
void nan_guard(const std::string& name, const Matrix<T>& m, long step) {
  const T* data = m.data();
  const auto n = static_cast<std::size_t>(m.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(data[i])) throw AnomalyDetected(name, i, step);
  }
}

template <typename T>
void nan_guard(const NamedTensors<T>& tensors, long step) {
  for (const auto& [name, m] : tensors) nan_guard(name, m, step);
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

template <typename T>
std::uint64_t tensor_hash(const NamedTensors<T>& tensors) {
  std::uint64_t h = kFnvOffset;
  for (const auto& [name, m] : tensors) {
    h = fnv1a(h, name.data(), name.size());
    const std::int64_t shape[2] = {m.rows(), m.cols()};
    h = fnv1a(h, shape, sizeof(shape));
    h = fnv1a(h, m.data(), sizeof(T) * static_cast<std::size_t>(m.size()));
  }
  return h;
}

template void nan_guard<float>(const std::string&, const Matrix<float>&, long);
template void nan_guard<double>(const std::string&, const Matrix<double>&, long);
template void nan_guard<float>(const NamedTensors<float>&, long);
template void nan_guard<double>(const NamedTensors<double>&, long);
template std::uint64_t tensor_hash<float>(const NamedTensors<float>&);
template std::uint64_t tensor_hash<double>(const NamedTensors<double>&);

}  // namespace sc2lora
