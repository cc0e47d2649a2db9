// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/errors.hpp"
#include "sc2lora/lora.hpp"
#include "sc2lora/model.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace sc2lora;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.n_layers = 4;
  c.d_model = 32;
  c.n_heads = 4;
  c.d_ff = 64;
  c.vocab_size = 40;
  c.max_seq_len = 32;
  return c;
}

template <typename T>
void randomize_b(LoraAdapter<T>& adapter, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  for (const auto& layer : adapter.layers) {
    Matrix<T>& b = adapter.tensors.at(LoraAdapter<T>::b_name(layer));
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = static_cast<T>(n(rng));
  }
}

template <typename T>
double max_rel(const Matrix<T>& got, const Matrix<T>& ref) {
  const double denom = std::max(static_cast<double>(ref.cwiseAbs().maxCoeff()), 1e-30);
  return static_cast<double>((got - ref).cwiseAbs().maxCoeff()) / denom;
}

std::vector<int> random_ids(std::mt19937_64& rng, int len, int vocab) {
  std::uniform_int_distribution<int> d(0, vocab - 1);
  std::vector<int> ids(static_cast<std::size_t>(len));
  for (auto& x : ids) x = d(rng);
  return ids;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("lora_forward hand example") {
  Matrix<double> w0 = Matrix<double>::Identity(2, 2);
  Matrix<double> a(1, 2), b(2, 1), x(2, 1);
  a << 1, 0;
  b << 1, 0;
  x << 1, 1;
  const Matrix<double> h = lora_forward(w0, a, b, 1.0, 1, x);
  CHECK(h(0, 0) == 2.0);
  CHECK(h(1, 0) == 1.0);

  const Matrix<double> h2 = lora_forward(w0, a, b, 2.0, 1, x);
  CHECK((h2 - w0 * x).isApprox(2.0 * (h - w0 * x)));

  const Matrix<double> zero_b = Matrix<double>::Zero(2, 1);
  CHECK(lora_forward(w0, a, zero_b, 1.0, 1, x) == w0 * x);
  CHECK(kind_of([&] { lora_forward<double>(w0, a, b, 1.0, 1, Matrix<double>::Ones(3, 1)); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("lora_forward equals the merged matrix product") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 5 + trial % 7, k = 3 + trial % 5, r = 1 + trial % 2, batch = 4;
    auto rnd = [&](int rows, int cols) {
      Matrix<float> m(rows, cols);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(n(rng));
      return m;
    };
    const Matrix<float> w0 = rnd(d, k), a = rnd(r, k), b = rnd(d, r), x = rnd(k, batch);
    const double alpha = 0.5 + trial;
    const Matrix<float> merged = w0 + static_cast<float>(alpha / r) * b * a;
    CHECK(max_rel<float>(lora_forward(w0, a, b, alpha, r, x), merged * x) <= 1e-5);
  }
}

TEST_CASE("attach creates one zero-B pair per selected layer") {
  const auto params = ModelParams<float>::init(small_config(), 1);
  const auto adapter = attach(params, LoraConfig{2, 4.0, LayerSelector::attention()}, 5);
  CHECK(adapter.layers.size() == 16);
  CHECK(adapter.tensors.size() == 32);
  for (const auto& layer : adapter.layers) {
    CHECK(adapter.b(layer).isZero(0.0));
    CHECK(adapter.a(layer).rows() == 2);
    CHECK(adapter.b(layer).cols() == 2);
  }
  const auto again = attach(params, LoraConfig{2, 4.0, LayerSelector::attention()}, 5);
  CHECK(again.tensors == adapter.tensors);
}

TEST_CASE("A is drawn from N(0, 1/r)") {
  ModelConfig c = small_config();
  c.d_model = 128;
  c.d_ff = 512;
  c.n_heads = 4;
  const auto params = ModelParams<double>::init(c, 1);
  const int r = 8;
  const auto adapter = attach(params, LoraConfig{r, 16.0, LayerSelector::all_linear()}, 3);
  double sum = 0, sq = 0;
  std::size_t n = 0;
  for (const auto& layer : adapter.layers) {
    const auto& a = adapter.a(layer);
    sum += a.sum();
    sq += a.squaredNorm();
    n += static_cast<std::size_t>(a.size());
  }
  const double mean = sum / static_cast<double>(n);
  const double var = sq / static_cast<double>(n) - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0 / r) < 0.01 * (1.0 / r) * 5);
}

TEST_CASE("attach errors") {
  const auto params = ModelParams<float>::init(small_config(), 1);
  CHECK(kind_of([&] { attach(params, LoraConfig{32, 4.0, LayerSelector::attention()}, 0); }) ==
        ErrorKind::RankTooLarge);
  CHECK(kind_of([&] { attach(params, LoraConfig{2, 4.0, LayerSelector::parse("attn.q@9")}, 0); }) ==
        ErrorKind::EmptySelection);
  CHECK_NOTHROW(attach(params, LoraConfig{31, 4.0, LayerSelector::attention()}, 0));
}

TEST_CASE("merge equivalence on random inputs") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const auto params = ModelParams<float>::init(small_config(), static_cast<std::uint64_t>(trial));
    auto adapter = attach(params, LoraConfig{1 + trial % 4, 2.0 + trial, LayerSelector::all_linear()},
                          static_cast<std::uint64_t>(100 + trial));
    randomize_b(adapter, rng, 0.05);
    const auto ids = random_ids(rng, 5 + trial, 40);
    const auto merged = merge(adapter, params);
    CHECK(max_rel<float>(forward(merged, nullptr, ids), forward(params, &adapter, ids)) <= 1e-5);
  }
  for (int trial = 0; trial < 5; ++trial) {
    const auto params = ModelParams<double>::init(small_config(), static_cast<std::uint64_t>(trial));
    auto adapter = attach(params, LoraConfig{4, 8.0, LayerSelector::default_targets()}, 7);
    randomize_b(adapter, rng, 0.05);
    const auto ids = random_ids(rng, 20, 40);
    CHECK(max_rel<double>(forward(merge(adapter, params), nullptr, ids), forward(params, &adapter, ids)) <= 1e-10);
  }
}

TEST_CASE("merge identities") {
  std::mt19937_64 rng(5);
  const auto params = ModelParams<float>::init(small_config(), 2);
  const auto fresh = attach(params, LoraConfig{2, 4.0, LayerSelector::default_targets()}, 3);
  CHECK(merge(fresh, params).tensors == params.tensors);

  auto trained = fresh;
  randomize_b(trained, rng, 0.05);
  const auto merged = merge(trained, params);
  const auto second = attach(merged, LoraConfig{2, 4.0, LayerSelector::attention()}, 8);
  const auto ids = random_ids(rng, 12, 40);
  CHECK(forward(merged, &second, ids) == forward(merged, nullptr, ids));

  auto missing = params;
  missing.tensors.erase("layers.0.attn.q.weight");
  CHECK(kind_of([&] { merge(trained, missing); }) == ErrorKind::MissingLayer);
}

TEST_CASE("trainable parameter count") {
  ModelConfig c = small_config();
  c.d_model = 8;
  c.n_heads = 2;
  const auto p8 = ModelParams<float>::init(c, 0);
  CHECK(trainable_param_count(LoraConfig{2, 4.0, LayerSelector::parse("attn.q@0")}, p8).count == 32);

  const auto params = ModelParams<float>::init(small_config(), 0);
  for (const auto& sel : {LayerSelector::attention(), LayerSelector::default_targets(), LayerSelector::all_linear(),
                          LayerSelector::parse("ff.down@1,3")}) {
    std::size_t base_count = 0;
    for (int r : {1, 2, 4, 8}) {
      const LoraConfig cfg{r, 16.0, sel};
      const auto tc = trainable_param_count(cfg, params);
      std::size_t elements = 0;
      for (const auto& [name, m] : attach(params, cfg, 0).tensors) elements += static_cast<std::size_t>(m.size());
      CHECK(tc.count == elements);
      CHECK(tc.fraction == Catch::Approx(static_cast<double>(elements) / params.param_count()));
      if (r == 1) base_count = tc.count;
      CHECK(tc.count == static_cast<std::size_t>(r) * base_count);
    }
  }
}

TEST_CASE("reference trainable fraction is 2.57 percent") {
  const double fraction = 74400320.0 / 2889784320.0;
  CHECK(std::round(fraction * 10000) / 100 == Catch::Approx(2.57));
}
