// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/checkpoint.hpp"

#include "sc2lora/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace sc2lora {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "tensor files are little-endian");

namespace {

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

json read_json(const std::filesystem::path& path) {
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

std::string read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_binary(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::size_t append(std::string& blob, const void* data, std::size_t bytes) {
  const std::size_t offset = blob.size();
  blob.append(static_cast<const char*>(data), bytes);
  return offset;
}

json dense_entry(const std::string& name, const Matrix<float>& m, std::string& blob) {
  const std::size_t offset = append(blob, m.data(), sizeof(float) * static_cast<std::size_t>(m.size()));
  return {{"name", name}, {"shape", {m.rows(), m.cols()}}, {"offset", offset}, {"dtype", "f32"}};
}

Matrix<float> read_dense(const json& entry, const std::string& blob, const std::string& source) {
  const auto shape = entry.at("shape").get<std::vector<long>>();
  const auto offset = entry.at("offset").get<std::size_t>();
  if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0) throw MalformedFile(source, 0, "bad tensor shape");
  const std::size_t bytes = sizeof(float) * static_cast<std::size_t>(shape[0] * shape[1]);
  if (offset + bytes > blob.size()) throw MalformedFile(source, 0, "tensor payload out of range");
  Matrix<float> m(shape[0], shape[1]);
  std::memcpy(m.data(), blob.data() + offset, bytes);
  return m;
}

void save_impl(const std::filesystem::path& dir, const QuantizedModel<float>& model, const Tokenizer& tokenizer) {
  std::filesystem::create_directories(dir);
  write_json(dir / "config.json", to_json(model.config));
  tokenizer.save(dir / "tokenizer.json");
  std::string blob;
  json entries = json::array();
  // Keep manifest order stable: all names sorted.
  std::map<std::string, int> names;
  for (const auto& [name, m] : model.dense) names.emplace(name, 0);
  for (const auto& [name, q] : model.quantized) names.emplace(name, 1);
  for (const auto& [name, kind] : names) {
    if (kind == 0) {
      entries.push_back(dense_entry(name, model.dense.at(name), blob));
      continue;
    }
    const QuantizedTensor<float>& q = model.quantized.at(name);
    const std::size_t offset = append(blob, q.q.data(), q.q.size());
    const std::size_t scale_offset = append(blob, q.scales.data(), sizeof(float) * q.scales.size());
    entries.push_back({{"name", name},
                       {"shape", {q.rows, q.cols}},
                       {"offset", offset},
                       {"scale_offset", scale_offset},
                       {"dtype", "i8+scale"}});
  }
  write_json(dir / "tensors.json", json{{"tensors", entries}});
  write_binary(dir / "tensors.bin", blob);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const ModelParams<float>& params, const Tokenizer& tokenizer) {
  QuantizedModel<float> model;
  model.config = params.config;
  model.dense = params.tensors;
  save_impl(dir, model, tokenizer);
}

void save_checkpoint(const std::filesystem::path& dir, const QuantizedModel<float>& model, const Tokenizer& tokenizer) {
  save_impl(dir, model, tokenizer);
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  Checkpoint ckpt;
  ckpt.model.config = model_config_from_json(read_json(dir / "config.json"));
  ckpt.model.config.validate();
  ckpt.tokenizer = Tokenizer::load(dir / "tokenizer.json");
  if (ckpt.tokenizer.vocab_size() != ckpt.model.config.vocab_size) {
    throw Error(ErrorKind::InvariantViolation, "tokenizer vocabulary does not match config.vocab_size");
  }
  const std::string manifest_path = (dir / "tensors.json").string();
  const json manifest = read_json(dir / "tensors.json");
  const std::string blob = read_binary(dir / "tensors.bin");
  for (const auto& entry : manifest.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const std::string dtype = entry.at("dtype").get<std::string>();
    if (dtype == "f32") {
      ckpt.model.dense.emplace(name, read_dense(entry, blob, manifest_path));
    } else if (dtype == "i8+scale") {
      QuantizedTensor<float> q;
      const auto shape = entry.at("shape").get<std::vector<int>>();
      if (shape.size() != 2) throw MalformedFile(manifest_path, 0, "bad tensor shape for " + name);
      q.rows = shape[0];
      q.cols = shape[1];
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto scale_offset = entry.at("scale_offset").get<std::size_t>();
      const std::size_t n = static_cast<std::size_t>(q.rows) * static_cast<std::size_t>(q.cols);
      if (offset + n > blob.size() || scale_offset + sizeof(float) * q.rows > blob.size()) {
        throw MalformedFile(manifest_path, 0, "tensor payload out of range for " + name);
      }
      q.q.resize(n);
      std::memcpy(q.q.data(), blob.data() + offset, n);
      q.scales.resize(static_cast<std::size_t>(q.rows));
      std::memcpy(q.scales.data(), blob.data() + scale_offset, sizeof(float) * q.scales.size());
      ckpt.model.quantized.emplace(name, std::move(q));
    } else {
      throw MalformedFile(manifest_path, 0, "unknown dtype '" + dtype + "'");
    }
  }
  // Every expected tensor must be present with its expected shape.
  for (const auto& [name, shape] : expected_shapes(ckpt.model.config)) {
    long rows = -1, cols = -1;
    if (auto it = ckpt.model.dense.find(name); it != ckpt.model.dense.end()) {
      rows = it->second.rows();
      cols = it->second.cols();
    } else if (auto qit = ckpt.model.quantized.find(name); qit != ckpt.model.quantized.end()) {
      rows = qit->second.rows;
      cols = qit->second.cols;
    } else {
      throw Error(ErrorKind::MissingLayer, "checkpoint lacks tensor '" + name + "'");
    }
    if (rows != shape.first || cols != shape.second) {
      throw Error(ErrorKind::ShapeMismatch, "tensor '" + name + "' has the wrong shape");
    }
  }
  return ckpt;
}

void save_adapter(const std::filesystem::path& dir, const LoraAdapter<float>& adapter) {
  std::filesystem::create_directories(dir);
  std::string blob;
  json entries = json::array();
  for (const auto& [name, m] : adapter.tensors) entries.push_back(dense_entry(name, m, blob));
  json doc = {{"rank", adapter.config.rank},
              {"alpha", adapter.config.alpha},
              {"targets", adapter.config.targets.str()},
              {"seed", adapter.seed},
              {"matchup", adapter.matchup},
              {"layers", adapter.layers},
              {"tensors", entries}};
  write_json(dir / "adapter.json", doc);
  write_binary(dir / "adapter.bin", blob);
}

LoraAdapter<float> load_adapter(const std::filesystem::path& dir) {
  const json doc = read_json(dir / "adapter.json");
  const std::string blob = read_binary(dir / "adapter.bin");
  const std::string source = (dir / "adapter.json").string();
  LoraAdapter<float> adapter;
  try {
    adapter.config.rank = doc.at("rank").get<int>();
    adapter.config.alpha = doc.at("alpha").get<double>();
    adapter.config.targets = LayerSelector::parse(doc.at("targets").get<std::string>());
    adapter.seed = doc.at("seed").get<std::uint64_t>();
    adapter.matchup = doc.value("matchup", std::string());
    adapter.layers = doc.at("layers").get<std::vector<std::string>>();
    for (const auto& entry : doc.at("tensors")) {
      adapter.tensors.emplace(entry.at("name").get<std::string>(), read_dense(entry, blob, source));
    }
  } catch (const json::exception& e) {
    throw MalformedFile(source, 0, e.what());
  }
  for (const auto& layer : adapter.layers) {
    if (!adapter.targets(layer) || !adapter.tensors.contains(LoraAdapter<float>::b_name(layer))) {
      throw MalformedFile(source, 0, "missing factors for layer " + layer);
    }
    const auto& a = adapter.a(layer);
    const auto& b = adapter.b(layer);
    if (a.rows() != adapter.config.rank || b.cols() != adapter.config.rank) {
      throw Error(ErrorKind::ShapeMismatch, "adapter factors for " + layer + " disagree with rank");
    }
  }
  return adapter;
}

}  // namespace sc2lora
