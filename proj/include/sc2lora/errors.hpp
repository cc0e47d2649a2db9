// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sc2lora {

enum class ErrorKind {
  MalformedFile,
  InvariantViolation,
  InsufficientReplays,
  OutOfRange,
  InvalidReward,
  UnknownAction,
  ShapeMismatch,
  SequenceTooLong,
  AnomalyDetected,
  PreconditionViolation,
  RankTooLarge,
  EmptySelection,
  MissingLayer,
  NonFiniteInput,
  HorizonMismatch,
  LengthMismatch,
  SameMatchup,
  Io,
  ConfigInvalid,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class MalformedFile : public Error {
 public:
  MalformedFile(std::string path, std::size_t line, const std::string& what)
      : Error(ErrorKind::MalformedFile, path + ":" + std::to_string(line) + ": " + what),
        path_(std::move(path)),
        line_(line) {}
  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

// Raised by the NaN/Inf guard. `step` is -1 outside a training loop.
class AnomalyDetected : public Error {
 public:
  AnomalyDetected(std::string tensor, std::size_t index, long step = -1)
      : Error(ErrorKind::AnomalyDetected,
              "non-finite value in '" + tensor + "' at index " + std::to_string(index) +
                  (step >= 0 ? " (step " + std::to_string(step) + ")" : "")),
        tensor_(std::move(tensor)),
        index_(index),
        step_(step) {}
  const std::string& tensor() const noexcept { return tensor_; }
  std::size_t index() const noexcept { return index_; }
  long step() const noexcept { return step_; }

 private:
  std::string tensor_;
  std::size_t index_;
  long step_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace sc2lora
