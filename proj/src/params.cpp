// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/params.hpp"

#include "sc2lora/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sc2lora {

void ModelConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::ConfigInvalid, what);
  };
  check(n_layers >= 1, "n_layers must be >= 1");
  check(d_model >= 1, "d_model must be >= 1");
  check(n_heads >= 1, "n_heads must be >= 1");
  check(d_model % n_heads == 0, "d_model must be divisible by n_heads");
  check(d_ff >= 1, "d_ff must be >= 1");
  check(vocab_size >= 5, "vocab_size must cover the special tokens");
  check(max_seq_len >= 1, "max_seq_len must be >= 1");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"n_layers", c.n_layers}, {"d_model", c.d_model},         {"n_heads", c.n_heads},
          {"d_ff", c.d_ff},         {"vocab_size", c.vocab_size}, {"max_seq_len", c.max_seq_len}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.n_layers = j.value("n_layers", c.n_layers);
  c.d_model = j.value("d_model", c.d_model);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_ff = j.value("d_ff", c.d_ff);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
  return c;
}

std::string linear_name(int layer, std::string_view kind) {
  return "layers." + std::to_string(layer) + "." + std::string(kind);
}

std::vector<std::string> linear_layer_names(const ModelConfig& config) {
  std::vector<std::string> names;
  for (int l = 0; l < config.n_layers; ++l) {
    for (auto kind : kLinearKinds) names.push_back(linear_name(l, kind));
  }
  return names;
}

LayerSelector LayerSelector::attention() { return {{"attn.q", "attn.k", "attn.v", "attn.out"}, {}}; }
LayerSelector LayerSelector::default_targets() { return {{"attn.q", "attn.k", "attn.v", "attn.out", "ff.up"}, {}}; }
LayerSelector LayerSelector::all_linear() { return {{kLinearKinds.begin(), kLinearKinds.end()}, {}}; }

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = s.find(sep, pos);
    std::string item(s.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

}  // namespace

LayerSelector LayerSelector::parse(std::string_view spec) {
  const std::size_t at = spec.find('@');
  const std::string_view kinds_part = spec.substr(0, at);
  LayerSelector sel;
  if (kinds_part == "attention") {
    sel = attention();
  } else if (kinds_part == "default") {
    sel = default_targets();
  } else if (kinds_part == "all") {
    sel = all_linear();
  } else {
    sel.kinds = split(kinds_part, ',');
    for (const auto& k : sel.kinds) {
      if (std::find(kLinearKinds.begin(), kLinearKinds.end(), k) == kLinearKinds.end()) {
        throw Error(ErrorKind::ConfigInvalid, "unknown layer kind '" + k + "'");
      }
    }
  }
  if (at != std::string_view::npos) {
    for (const auto& idx : split(spec.substr(at + 1), ',')) {
      try {
        sel.layers.push_back(std::stoi(idx));
      } catch (const std::exception&) {
        throw Error(ErrorKind::ConfigInvalid, "bad layer index '" + idx + "'");
      }
    }
  }
  return sel;
}

std::string LayerSelector::str() const {
  std::string out;
  for (std::size_t i = 0; i < kinds.size(); ++i) out += (i ? "," : "") + kinds[i];
  if (!layers.empty()) {
    out += "@";
    for (std::size_t i = 0; i < layers.size(); ++i) out += (i ? "," : "") + std::to_string(layers[i]);
  }
  return out;
}

bool LayerSelector::matches(std::string_view linear) const {
  // linear = "layers.<i>.<kind>"
  constexpr std::string_view prefix = "layers.";
  if (linear.substr(0, prefix.size()) != prefix) return false;
  const std::size_t dot = linear.find('.', prefix.size());
  if (dot == std::string_view::npos) return false;
  const std::string_view kind = linear.substr(dot + 1);
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) return false;
  if (layers.empty()) return true;
  const int index = std::stoi(std::string(linear.substr(prefix.size(), dot - prefix.size())));
  return std::find(layers.begin(), layers.end(), index) != layers.end();
}

std::vector<std::string> LayerSelector::select(const ModelConfig& config) const {
  std::vector<std::string> out;
  for (const auto& name : linear_layer_names(config)) {
    if (matches(name)) out.push_back(name);
  }
  return out;
}

std::map<std::string, std::pair<int, int>> expected_shapes(const ModelConfig& c) {
  std::map<std::string, std::pair<int, int>> shapes;
  shapes["tok_embed"] = {c.vocab_size, c.d_model};
  shapes["pos_embed"] = {c.max_seq_len, c.d_model};
  for (int l = 0; l < c.n_layers; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    shapes[p + "ln1.gain"] = {1, c.d_model};
    shapes[p + "ln1.bias"] = {1, c.d_model};
    shapes[p + "ln2.gain"] = {1, c.d_model};
    shapes[p + "ln2.bias"] = {1, c.d_model};
    for (std::string_view kind : {"attn.q", "attn.k", "attn.v", "attn.out"}) {
      shapes[p + std::string(kind) + ".weight"] = {c.d_model, c.d_model};
      shapes[p + std::string(kind) + ".bias"] = {1, c.d_model};
    }
    shapes[p + "ff.up.weight"] = {c.d_ff, c.d_model};
    shapes[p + "ff.up.bias"] = {1, c.d_ff};
    shapes[p + "ff.down.weight"] = {c.d_model, c.d_ff};
    shapes[p + "ff.down.bias"] = {1, c.d_model};
  }
  shapes["ln_f.gain"] = {1, c.d_model};
  shapes["ln_f.bias"] = {1, c.d_model};
  shapes["lm_head.weight"] = {c.vocab_size, c.d_model};
  return shapes;
}

template <typename T>
ModelParams<T> ModelParams<T>::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams<T> p;
  p.config = config;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double residual_std = 0.02 / std::sqrt(2.0 * config.n_layers);
  for (const auto& [name, shape] : expected_shapes(config)) {
    Matrix<T> m(shape.first, shape.second);
    const bool is_gain = name.ends_with(".gain");
    const bool is_bias = name.ends_with(".bias");
    const bool residual = name.ends_with("attn.out.weight") || name.ends_with("ff.down.weight");
    const double std = residual ? residual_std : 0.02;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = is_gain ? T(1) : is_bias ? T(0) : static_cast<T>(std * normal(rng));
    }
    p.tensors.emplace(name, std::move(m));
  }
  return p;
}

template <typename T>
const Matrix<T>& ModelParams<T>::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw Error(ErrorKind::MissingLayer, "no tensor named '" + name + "'");
  return it->second;
}

template <typename T>
Matrix<T>& ModelParams<T>::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw Error(ErrorKind::MissingLayer, "no tensor named '" + name + "'");
  return it->second;
}

template <typename T>
std::size_t ModelParams<T>::param_count() const {
  std::size_t n = 0;
  for (const auto& [name, m] : tensors) n += static_cast<std::size_t>(m.size());
  return n;
}

template struct ModelParams<float>;
template struct ModelParams<double>;

}  // namespace sc2lora
