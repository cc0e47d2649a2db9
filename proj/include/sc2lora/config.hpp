// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sc2lora/evaluator.hpp"
#include "sc2lora/trainer.hpp"

#include <json.hpp>

#include <filesystem>

namespace sc2lora {

nlohmann::json load_json_file(const std::filesystem::path& path);  // Io / MalformedFile

// Keys absent from `j` keep the value in `defaults`; unknown keys and
// wrongly typed values raise ConfigInvalid. The result is validated.
LoraConfig lora_config_from_json(const nlohmann::json& j, const LoraConfig& defaults = {});
TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& defaults = {});
EvalConfig eval_config_from_json(const nlohmann::json& j, const EvalConfig& defaults = {});

nlohmann::json to_json(const LoraConfig& cfg);
nlohmann::json to_json(const TrainConfig& cfg);
nlohmann::json to_json(const EvalConfig& cfg);

}  // namespace sc2lora
