// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/config.hpp"

#include "sc2lora/errors.hpp"

#include <fstream>
#include <set>

namespace sc2lora {

using nlohmann::json;

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    json doc;
    in >> doc;
    return doc;
  } catch (const json::exception& e) {
    throw MalformedFile(path.string(), 0, e.what());
  }
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::ConfigInvalid, where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw Error(ErrorKind::ConfigInvalid, "unknown key '" + key + "' in " + where);
  }
}

template <typename V>
void read(const json& j, const char* key, V& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::ConfigInvalid, std::string("bad value for '") + key + "'");
  }
}

}  // namespace

LoraConfig lora_config_from_json(const json& j, const LoraConfig& defaults) {
  reject_unknown(j, {"rank", "alpha", "targets"}, "lora config");
  LoraConfig cfg = defaults;
  read(j, "rank", cfg.rank);
  read(j, "alpha", cfg.alpha);
  if (j.contains("targets")) {
    std::string spec;
    read(j, "targets", spec);
    try {
      cfg.targets = LayerSelector::parse(spec);
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigInvalid, e.what());
    }
  }
  if (cfg.rank < 1) throw Error(ErrorKind::ConfigInvalid, "lora.rank must be >= 1");
  if (!(cfg.alpha > 0)) throw Error(ErrorKind::ConfigInvalid, "lora.alpha must be > 0");
  return cfg;
}

TrainConfig train_config_from_json(const json& j, const TrainConfig& defaults) {
  reject_unknown(j,
                 {"peak_lr", "epochs", "warmup_steps", "grad_accum_steps", "batch_size", "max_tokens", "seed", "lora",
                  "quantize_base", "weight_decay", "beta1", "beta2", "eps"},
                 "train config");
  TrainConfig cfg = defaults;
  read(j, "peak_lr", cfg.peak_lr);
  read(j, "epochs", cfg.epochs);
  read(j, "warmup_steps", cfg.warmup_steps);
  read(j, "grad_accum_steps", cfg.grad_accum_steps);
  read(j, "batch_size", cfg.batch_size);
  read(j, "max_tokens", cfg.max_tokens);
  read(j, "seed", cfg.seed);
  read(j, "quantize_base", cfg.quantize_base);
  read(j, "weight_decay", cfg.weight_decay);
  read(j, "beta1", cfg.beta1);
  read(j, "beta2", cfg.beta2);
  read(j, "eps", cfg.eps);
  if (j.contains("lora")) cfg.lora = lora_config_from_json(j.at("lora"), defaults.lora);
  cfg.validate();
  return cfg;
}

EvalConfig eval_config_from_json(const json& j, const EvalConfig& defaults) {
  reject_unknown(j, {"horizon", "max_new_tokens", "max_steps", "seed", "threads", "building_plane", "threshold"},
                 "eval config");
  EvalConfig cfg = defaults;
  read(j, "horizon", cfg.horizon);
  read(j, "max_new_tokens", cfg.max_new_tokens);
  read(j, "max_steps", cfg.max_steps);
  read(j, "seed", cfg.seed);
  read(j, "threads", cfg.threads);
  read(j, "building_plane", cfg.describer.building_plane);
  read(j, "threshold", cfg.describer.threshold);
  cfg.validate();
  return cfg;
}

json to_json(const LoraConfig& cfg) {
  return {{"rank", cfg.rank}, {"alpha", cfg.alpha}, {"targets", cfg.targets.str()}};
}

json to_json(const TrainConfig& cfg) {
  return {{"peak_lr", cfg.peak_lr},
          {"epochs", cfg.epochs},
          {"warmup_steps", cfg.warmup_steps},
          {"grad_accum_steps", cfg.grad_accum_steps},
          {"batch_size", cfg.batch_size},
          {"max_tokens", cfg.max_tokens},
          {"seed", cfg.seed},
          {"lora", to_json(cfg.lora)},
          {"quantize_base", cfg.quantize_base},
          {"weight_decay", cfg.weight_decay},
          {"beta1", cfg.beta1},
          {"beta2", cfg.beta2},
          {"eps", cfg.eps}};
}

json to_json(const EvalConfig& cfg) {
  return {{"horizon", cfg.horizon},
          {"max_new_tokens", cfg.max_new_tokens},
          {"max_steps", cfg.max_steps},
          {"seed", cfg.seed},
          {"threads", cfg.threads},
          {"building_plane", cfg.describer.building_plane},
          {"threshold", cfg.describer.threshold}};
}

}  // namespace sc2lora
