// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/errors.hpp"
#include "sc2lora/lora.hpp"
#include "sc2lora/model.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace sc2lora;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.n_layers = 2;
  c.d_model = 16;
  c.n_heads = 2;
  c.d_ff = 32;
  c.vocab_size = 23;
  c.max_seq_len = 24;
  return c;
}

std::vector<int> random_ids(std::mt19937_64& rng, int len, int vocab) {
  std::uniform_int_distribution<int> d(0, vocab - 1);
  std::vector<int> ids(static_cast<std::size_t>(len));
  for (auto& x : ids) x = d(rng);
  return ids;
}

TokenSequence random_sequence(std::mt19937_64& rng, int len, int vocab) {
  TokenSequence s;
  s.ids = random_ids(rng, len, vocab);
  std::bernoulli_distribution coin(0.6);
  s.mask.resize(s.ids.size());
  for (auto& m : s.mask) m = coin(rng) ? 1 : 0;
  s.mask[0] = 0;
  s.mask.back() = 1;
  return s;
}

// Perturbs gains, biases and LoRA B so that every gradient path is active.
template <typename T>
void jitter(NamedTensors<T>& tensors, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  for (auto& [name, m] : tensors) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += static_cast<T>(n(rng));
  }
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

}  // namespace

TEST_CASE("forward shape, causality and normalisation") {
  std::mt19937_64 rng(1);
  const auto params = ModelParams<float>::init(tiny_config(), 3);
  auto ids = random_ids(rng, 10, 23);
  const Matrix<float> logits = forward(params, nullptr, ids);
  CHECK(logits.rows() == 10);
  CHECK(logits.cols() == 23);

  ids.push_back(5);
  const Matrix<float> longer = forward(params, nullptr, ids);
  CHECK((longer.topRows(10) - logits).cwiseAbs().maxCoeff() == 0.0f);

  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r).template cast<double>();
    const double sum = (row.array() - row.maxCoeff()).exp().sum();
    const auto p = (row.array() - row.maxCoeff()).exp() / sum;
    CHECK(std::abs(p.sum() - 1.0) <= 1e-6);
  }
}

TEST_CASE("forward rejects sequences beyond the context") {
  const auto params = ModelParams<float>::init(tiny_config(), 3);
  std::vector<int> ids(25, 1);
  try {
    forward(params, nullptr, ids);
    FAIL("expected SequenceTooLong");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SequenceTooLong);
  }
}

TEST_CASE("uniform logits give ln(V) loss") {
  auto params = ModelParams<double>::init(tiny_config(), 4);
  params.at("lm_head.weight").setZero();
  std::mt19937_64 rng(2);
  const TokenSequence seq = random_sequence(rng, 12, 23);
  const auto lg = loss_and_grads(params, nullptr, std::span<const TokenSequence>(&seq, 1), Trainable::Base);
  CHECK(std::abs(lg.loss - std::log(23.0)) <= 1e-6);
}

TEST_CASE("an all-zero mask is rejected") {
  const auto params = ModelParams<float>::init(tiny_config(), 4);
  TokenSequence seq{{1, 2, 3}, {0, 0, 0}};
  try {
    loss_and_grads(params, nullptr, std::span<const TokenSequence>(&seq, 1));
    FAIL("expected PreconditionViolation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PreconditionViolation);
  }
}

TEST_CASE("fresh adapter leaves the forward pass bit-identical") {
  const auto params = ModelParams<float>::init(tiny_config(), 5);
  const auto adapter = attach(params, LoraConfig{2, 4.0, LayerSelector::all_linear()}, 9);
  std::mt19937_64 rng(3);
  const auto ids = random_ids(rng, 16, 23);
  CHECK(forward(params, &adapter, ids) == forward(params, nullptr, ids));
}

TEST_CASE("gradients flow only to the trainable set") {
  const auto params = ModelParams<float>::init(tiny_config(), 5);
  const auto adapter = attach(params, LoraConfig{2, 4.0, LayerSelector::attention()}, 9);
  std::mt19937_64 rng(4);
  const TokenSequence seq = random_sequence(rng, 8, 23);
  const auto a = loss_and_grads(params, &adapter, std::span<const TokenSequence>(&seq, 1), Trainable::Adapter);
  CHECK(a.grads.size() == adapter.tensors.size());
  for (const auto& [name, g] : a.grads) CHECK(adapter.tensors.contains(name));
  const auto b = loss_and_grads(params, nullptr, std::span<const TokenSequence>(&seq, 1), Trainable::Base);
  CHECK(b.grads.size() == params.tensors.size());
}

TEST_CASE("analytic gradients match central differences in double precision") {
  std::mt19937_64 rng(17);
  auto params = ModelParams<double>::init(tiny_config(), 21);
  jitter(params.tensors, rng, 0.05);
  auto adapter = attach(params, LoraConfig{2, 4.0, LayerSelector::all_linear()}, 22);
  jitter(adapter.tensors, rng, 0.1);
  std::vector<TokenSequence> batch = {random_sequence(rng, 9, 23), random_sequence(rng, 13, 23)};

  auto check_mode = [&](Trainable mode, const LoraAdapter<double>* ad, NamedTensors<double>& target, int samples) {
    const auto lg = loss_and_grads(params, ad, batch, mode);
    std::vector<std::pair<std::string, Eigen::Index>> picks;
    std::vector<std::string> names;
    for (const auto& [name, g] : lg.grads) names.push_back(name);
    std::uniform_int_distribution<std::size_t> pick_name(0, names.size() - 1);
    int checked = 0;
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      const std::string& name = names[pick_name(rng)];
      Matrix<double>& w = target.at(name);
      std::uniform_int_distribution<Eigen::Index> pick(0, w.size() - 1);
      const Eigen::Index i = pick(rng);
      const double orig = w.data()[i];
      const double h = 1e-5;
      w.data()[i] = orig + h;
      const double up = loss_and_grads(params, ad, batch, mode).loss;
      w.data()[i] = orig - h;
      const double down = loss_and_grads(params, ad, batch, mode).loss;
      w.data()[i] = orig;
      const double fd = (up - down) / (2 * h);
      const double an = lg.grads.at(name).data()[i];
      const double e = rel_err(an, fd);
      worst = std::max(worst, e);
      if (e > 1e-3) INFO(name << "[" << i << "] analytic " << an << " fd " << fd);
      CHECK(e <= 1e-3);
      ++checked;
    }
    return worst;
  };
  const double worst_adapter = check_mode(Trainable::Adapter, &adapter, adapter.tensors, 150);
  const double worst_base = check_mode(Trainable::Base, nullptr, params.tensors, 150);
  INFO("worst relative error: adapter " << worst_adapter << ", base " << worst_base);
  CHECK(worst_adapter <= 1e-3);
  CHECK(worst_base <= 1e-3);
}

TEST_CASE("gradient accumulation matches the whole-batch result") {
  std::mt19937_64 rng(8);
  const auto params = ModelParams<float>::init(tiny_config(), 6);
  auto adapter = attach(params, LoraConfig{2, 4.0, LayerSelector::default_targets()}, 7);
  jitter(adapter.tensors, rng, 0.05);
  std::vector<TokenSequence> batch;
  for (int i = 0; i < 6; ++i) batch.push_back(random_sequence(rng, 6 + 3 * i, 23));

  const auto whole = loss_and_grads(params, &adapter, batch, Trainable::Adapter);

  // Micro-batches of two through the accumulator.
  GradientAccumulator<float> acc(params, &adapter, Trainable::Adapter);
  for (std::size_t i = 0; i < batch.size(); i += 2) {
    acc.add(batch[i]);
    acc.add(batch[i + 1]);
  }
  const auto micro = acc.mean();

  // Independent bookkeeping: token-weighted average of per-sequence means.
  double total = 0;
  double loss = 0;
  NamedTensors<double> grads;
  for (const auto& seq : batch) {
    const auto one = loss_and_grads(params, &adapter, std::span<const TokenSequence>(&seq, 1), Trainable::Adapter);
    const double n = static_cast<double>(one.tokens);
    total += n;
    loss += n * one.loss;
    for (const auto& [name, g] : one.grads) {
      auto [it, fresh] = grads.try_emplace(name, Matrix<double>::Zero(g.rows(), g.cols()));
      it->second += n * g.template cast<double>();
    }
  }
  loss /= total;
  CHECK(whole.tokens == static_cast<std::size_t>(total));
  CHECK(rel_err(whole.loss, loss) <= 1e-5);
  CHECK(rel_err(micro.loss, whole.loss) <= 1e-5);
  for (const auto& [name, g] : grads) {
    const Matrix<double> expected = g / total;
    const double scale = std::max(expected.cwiseAbs().maxCoeff(), 1e-8);
    CHECK((whole.grads.at(name).cast<double>() - expected).cwiseAbs().maxCoeff() / scale <= 1e-5);
    CHECK((micro.grads.at(name).cast<double>() - expected).cwiseAbs().maxCoeff() / scale <= 1e-5);
  }
}

TEST_CASE("generate is greedy, deterministic and bounded") {
  const auto params = ModelParams<float>::init(tiny_config(), 8);
  const std::vector<int> prompt = {1, 5, 7};
  const auto a = generate(params, nullptr, prompt, 10, 2);
  CHECK(a == generate(params, nullptr, prompt, 10, 2));
  CHECK(a.size() <= 10);
  for (int id : a) CHECK(id != 2);
  CHECK(generate(params, nullptr, prompt, 0, 2).empty());

  // The first generated token is the argmax of the prompt's last logit row.
  if (!a.empty()) {
    const Matrix<float> logits = forward(params, nullptr, prompt);
    Eigen::Index best = 0;
    logits.row(2).maxCoeff(&best);
    CHECK(a[0] == static_cast<int>(best));
  }
  try {
    generate(params, nullptr, prompt, 22, 2);
    FAIL("expected SequenceTooLong");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SequenceTooLong);
  }
}

TEST_CASE("non-finite parameters raise AnomalyDetected") {
  auto params = ModelParams<float>::init(tiny_config(), 8);
  params.at("layers.0.ff.up.weight")(0, 0) = std::numeric_limits<float>::infinity();
  std::mt19937_64 rng(1);
  const TokenSequence seq = random_sequence(rng, 8, 23);
  CHECK_THROWS_AS(loss_and_grads(params, nullptr, std::span<const TokenSequence>(&seq, 1), Trainable::Base),
                  AnomalyDetected);
}
