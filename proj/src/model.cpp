// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/model.hpp"

#include "sc2lora/errors.hpp"

#include <cmath>
#include <limits>

namespace sc2lora {

namespace {

constexpr double kLayerNormEps = 1e-5;

template <typename T>
using Column = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// A base linear layer plus its optional low-rank path.
template <typename T>
struct Linear {
  std::string name;
  const Matrix<T>* weight = nullptr;
  const Matrix<T>* bias = nullptr;
  const Matrix<T>* lora_a = nullptr;
  const Matrix<T>* lora_b = nullptr;
  T scale = 0;
};

template <typename T>
Linear<T> resolve(const ModelParams<T>& params, const LoraAdapter<T>* adapter, const std::string& name) {
  Linear<T> l;
  l.name = name;
  l.weight = &params.at(name + ".weight");
  l.bias = &params.at(name + ".bias");
  if (adapter != nullptr && adapter->targets(name)) {
    l.lora_a = &adapter->a(name);
    l.lora_b = &adapter->b(name);
    l.scale = adapter->scaling();
  }
  return l;
}

template <typename T>
Matrix<T> linear_forward(const Linear<T>& l, const Matrix<T>& x, Matrix<T>* z_out) {
  Matrix<T> y(x.rows(), l.weight->rows());
  y.noalias() = x * l.weight->transpose();
  y.rowwise() += l.bias->row(0);
  if (l.lora_a != nullptr) {
    Matrix<T> z(x.rows(), l.lora_a->rows());
    z.noalias() = x * l.lora_a->transpose();
    y.noalias() += l.scale * (z * l.lora_b->transpose());
    if (z_out != nullptr) *z_out = std::move(z);
  }
  return y;
}

template <typename T>
void add_to(NamedTensors<T>& grads, const std::string& name, const Matrix<T>& delta) {
  grads.at(name) += delta;
}

// Returns dL/dx and accumulates parameter gradients into `grads`.
template <typename T>
Matrix<T> linear_backward(const Linear<T>& l, const Matrix<T>& x, const Matrix<T>& z, const Matrix<T>& dy,
                          NamedTensors<T>* grads, Trainable trainable) {
  Matrix<T> dx(dy.rows(), l.weight->cols());
  dx.noalias() = dy * (*l.weight);
  if (l.lora_a != nullptr) {
    Matrix<T> dz(dy.rows(), l.lora_b->cols());
    dz.noalias() = l.scale * (dy * (*l.lora_b));
    dx.noalias() += dz * (*l.lora_a);
    if (grads != nullptr && trainable == Trainable::Adapter) {
      Matrix<T> da(l.lora_a->rows(), l.lora_a->cols());
      da.noalias() = dz.transpose() * x;
      add_to(*grads, LoraAdapter<T>::a_name(l.name), da);
      Matrix<T> db(l.lora_b->rows(), l.lora_b->cols());
      db.noalias() = l.scale * (dy.transpose() * z);
      add_to(*grads, LoraAdapter<T>::b_name(l.name), db);
    }
  }
  if (grads != nullptr && trainable == Trainable::Base) {
    Matrix<T> dw(l.weight->rows(), l.weight->cols());
    dw.noalias() = dy.transpose() * x;
    add_to(*grads, l.name + ".weight", dw);
    grads->at(l.name + ".bias").row(0) += dy.colwise().sum();
  }
  return dx;
}

template <typename T>
struct NormCache {
  Matrix<T> xhat;
  Column<T> rstd;
};

template <typename T>
Matrix<T> layer_norm(const Matrix<T>& x, const Matrix<T>& gain, const Matrix<T>& bias, NormCache<T>& cache) {
  const Column<T> mean = x.rowwise().mean();
  Matrix<T> centered = x.colwise() - mean;
  const Column<T> var = centered.array().square().rowwise().mean();
  cache.rstd = (var.array() + static_cast<T>(kLayerNormEps)).rsqrt();
  cache.xhat = centered.array().colwise() * cache.rstd.array();
  Matrix<T> y = cache.xhat.array().rowwise() * gain.row(0).array();
  y.rowwise() += bias.row(0);
  return y;
}

template <typename T>
Matrix<T> layer_norm_backward(const Matrix<T>& dy, const Matrix<T>& gain, const NormCache<T>& cache,
                              NamedTensors<T>* grads, const std::string& prefix, bool train) {
  if (grads != nullptr && train) {
    grads->at(prefix + ".gain").row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    grads->at(prefix + ".bias").row(0) += dy.colwise().sum();
  }
  const Matrix<T> dxhat = dy.array().rowwise() * gain.row(0).array();
  const Column<T> mean_d = dxhat.rowwise().mean();
  const Column<T> mean_dx = (dxhat.array() * cache.xhat.array()).rowwise().mean();
  Matrix<T> dx = dxhat.colwise() - mean_d;
  dx.array() -= cache.xhat.array().colwise() * mean_dx.array();
  dx.array().colwise() *= cache.rstd.array();
  return dx;
}

template <typename T>
T gelu(T u) {
  const T c = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  return static_cast<T>(0.5) * u * (1 + std::tanh(c * (u + static_cast<T>(0.044715) * u * u * u)));
}

template <typename T>
T gelu_grad(T u) {
  const T c = static_cast<T>(0.7978845608028654);
  const T k = static_cast<T>(0.044715);
  const T t = std::tanh(c * (u + k * u * u * u));
  return static_cast<T>(0.5) * (1 + t) + static_cast<T>(0.5) * u * (1 - t * t) * c * (1 + 3 * k * u * u);
}

template <typename T>
struct BlockTape {
  Matrix<T> x_in;
  NormCache<T> ln1;
  Matrix<T> h1;
  Matrix<T> q, k, v;
  Matrix<T> zq, zk, zv;
  std::vector<Matrix<T>> probs;  // one n x n lower-triangular matrix per head
  Matrix<T> attn;
  Matrix<T> zo;
  Matrix<T> x_mid;
  NormCache<T> ln2;
  Matrix<T> h2;
  Matrix<T> u, g;
  Matrix<T> zu, zd;
};

template <typename T>
struct Tape {
  std::vector<BlockTape<T>> blocks;
  NormCache<T> ln_f;
  Matrix<T> xf;
};

template <typename T>
struct BlockLayers {
  Linear<T> q, k, v, out, up, down;
};

template <typename T>
BlockLayers<T> block_layers(const ModelParams<T>& params, const LoraAdapter<T>* adapter, int layer) {
  return {resolve(params, adapter, linear_name(layer, "attn.q")),  resolve(params, adapter, linear_name(layer, "attn.k")),
          resolve(params, adapter, linear_name(layer, "attn.v")),  resolve(params, adapter, linear_name(layer, "attn.out")),
          resolve(params, adapter, linear_name(layer, "ff.up")),   resolve(params, adapter, linear_name(layer, "ff.down"))};
}

template <typename T>
void check_ids(const ModelConfig& config, std::span<const int> ids) {
  if (static_cast<int>(ids.size()) > config.max_seq_len) {
    throw Error(ErrorKind::SequenceTooLong, std::to_string(ids.size()) + " tokens exceed max_seq_len " +
                                                std::to_string(config.max_seq_len));
  }
  for (int id : ids) {
    if (id < 0 || id >= config.vocab_size) throw Error(ErrorKind::OutOfRange, "token id " + std::to_string(id));
  }
}

// Causal multi-head attention over one sequence.
template <typename T>
Matrix<T> attention(const ModelConfig& config, const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                    std::vector<Matrix<T>>& probs) {
  const auto n = q.rows();
  const int dh = config.head_dim();
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  Matrix<T> out(n, config.d_model);
  probs.resize(static_cast<std::size_t>(config.n_heads));
  for (int h = 0; h < config.n_heads; ++h) {
    const auto qh = q.middleCols(h * dh, dh);
    const auto kh = k.middleCols(h * dh, dh);
    const auto vh = v.middleCols(h * dh, dh);
    Matrix<T> p(n, n);
    p.noalias() = qh * kh.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      auto row = p.row(i);
      T max = -std::numeric_limits<T>::infinity();
      for (Eigen::Index j = 0; j <= i; ++j) {
        row(j) *= inv_sqrt;
        max = std::max(max, row(j));
      }
      T sum = 0;
      for (Eigen::Index j = 0; j <= i; ++j) {
        row(j) = std::exp(row(j) - max);
        sum += row(j);
      }
      const T inv = 1 / sum;
      for (Eigen::Index j = 0; j <= i; ++j) row(j) *= inv;
      for (Eigen::Index j = i + 1; j < n; ++j) row(j) = 0;
    }
    out.middleCols(h * dh, dh).noalias() = p * vh;
    probs[static_cast<std::size_t>(h)] = std::move(p);
  }
  return out;
}

template <typename T>
void attention_backward(const ModelConfig& config, const BlockTape<T>& tape, const Matrix<T>& dattn, Matrix<T>& dq,
                        Matrix<T>& dk, Matrix<T>& dv) {
  const auto n = dattn.rows();
  const int dh = config.head_dim();
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  dq.setZero(n, config.d_model);
  dk.setZero(n, config.d_model);
  dv.setZero(n, config.d_model);
  for (int h = 0; h < config.n_heads; ++h) {
    const Matrix<T>& p = tape.probs[static_cast<std::size_t>(h)];
    const auto doh = dattn.middleCols(h * dh, dh);
    dv.middleCols(h * dh, dh).noalias() = p.transpose() * doh;
    Matrix<T> ds(n, n);
    ds.noalias() = doh * tape.v.middleCols(h * dh, dh).transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      T dot = 0;
      for (Eigen::Index j = 0; j <= i; ++j) dot += p(i, j) * ds(i, j);
      for (Eigen::Index j = 0; j <= i; ++j) ds(i, j) = p(i, j) * (ds(i, j) - dot) * inv_sqrt;
      for (Eigen::Index j = i + 1; j < n; ++j) ds(i, j) = 0;
    }
    dq.middleCols(h * dh, dh).noalias() = ds * tape.k.middleCols(h * dh, dh);
    dk.middleCols(h * dh, dh).noalias() = ds.transpose() * tape.q.middleCols(h * dh, dh);
  }
}

// Runs the blocks and the final norm; returns the normalized hidden states.
template <typename T>
Matrix<T> run_blocks(const ModelParams<T>& params, const LoraAdapter<T>* adapter, std::span<const int> ids,
                     Tape<T>* tape) {
  const ModelConfig& config = params.config;
  check_ids<T>(config, ids);
  const auto n = static_cast<Eigen::Index>(ids.size());
  const Matrix<T>& tok = params.at("tok_embed");
  const Matrix<T>& pos = params.at("pos_embed");
  Matrix<T> x(n, config.d_model);
  for (Eigen::Index t = 0; t < n; ++t) x.row(t) = tok.row(ids[static_cast<std::size_t>(t)]) + pos.row(t);

  if (tape != nullptr) tape->blocks.resize(static_cast<std::size_t>(config.n_layers));
  for (int l = 0; l < config.n_layers; ++l) {
    BlockTape<T> local;
    BlockTape<T>& bt = tape != nullptr ? tape->blocks[static_cast<std::size_t>(l)] : local;
    const BlockLayers<T> layers = block_layers(params, adapter, l);
    const std::string prefix = "layers." + std::to_string(l) + ".";

    bt.x_in = x;
    bt.h1 = layer_norm(x, params.at(prefix + "ln1.gain"), params.at(prefix + "ln1.bias"), bt.ln1);
    bt.q = linear_forward(layers.q, bt.h1, &bt.zq);
    bt.k = linear_forward(layers.k, bt.h1, &bt.zk);
    bt.v = linear_forward(layers.v, bt.h1, &bt.zv);
    bt.attn = attention(config, bt.q, bt.k, bt.v, bt.probs);
    x += linear_forward(layers.out, bt.attn, &bt.zo);

    bt.x_mid = x;
    bt.h2 = layer_norm(x, params.at(prefix + "ln2.gain"), params.at(prefix + "ln2.bias"), bt.ln2);
    bt.u = linear_forward(layers.up, bt.h2, &bt.zu);
    bt.g = bt.u.unaryExpr([](T u) { return gelu(u); });
    x += linear_forward(layers.down, bt.g, &bt.zd);
  }
  NormCache<T> local_norm;
  NormCache<T>& norm = tape != nullptr ? tape->ln_f : local_norm;
  Matrix<T> xf = layer_norm(x, params.at("ln_f.gain"), params.at("ln_f.bias"), norm);
  if (tape != nullptr) tape->xf = xf;
  return xf;
}

template <typename T>
void backward(const ModelParams<T>& params, const LoraAdapter<T>* adapter, std::span<const int> ids, const Tape<T>& tape,
              const Matrix<T>& dlogits, NamedTensors<T>& grads, Trainable trainable) {
  const ModelConfig& config = params.config;
  const bool base = trainable == Trainable::Base;
  const Matrix<T>& head = params.at("lm_head.weight");
  Matrix<T> dxf(dlogits.rows(), config.d_model);
  dxf.noalias() = dlogits * head;
  if (base) grads.at("lm_head.weight").noalias() += dlogits.transpose() * tape.xf;
  Matrix<T> dx = layer_norm_backward(dxf, params.at("ln_f.gain"), tape.ln_f, &grads, "ln_f", base);

  for (int l = config.n_layers - 1; l >= 0; --l) {
    const BlockTape<T>& bt = tape.blocks[static_cast<std::size_t>(l)];
    const BlockLayers<T> layers = block_layers(params, adapter, l);
    const std::string prefix = "layers." + std::to_string(l) + ".";

    // Feed-forward residual branch.
    Matrix<T> dg = linear_backward(layers.down, bt.g, bt.zd, dx, &grads, trainable);
    Matrix<T> du = dg.array() * bt.u.unaryExpr([](T u) { return gelu_grad(u); }).array();
    Matrix<T> dh2 = linear_backward(layers.up, bt.h2, bt.zu, du, &grads, trainable);
    dx += layer_norm_backward(dh2, params.at(prefix + "ln2.gain"), bt.ln2, &grads, prefix + "ln2", base);

    // Attention residual branch.
    Matrix<T> dattn = linear_backward(layers.out, bt.attn, bt.zo, dx, &grads, trainable);
    Matrix<T> dq, dk, dv;
    attention_backward(config, bt, dattn, dq, dk, dv);
    Matrix<T> dh1 = linear_backward(layers.q, bt.h1, bt.zq, dq, &grads, trainable);
    dh1 += linear_backward(layers.k, bt.h1, bt.zk, dk, &grads, trainable);
    dh1 += linear_backward(layers.v, bt.h1, bt.zv, dv, &grads, trainable);
    dx += layer_norm_backward(dh1, params.at(prefix + "ln1.gain"), bt.ln1, &grads, prefix + "ln1", base);
  }

  if (base) {
    Matrix<T>& dtok = grads.at("tok_embed");
    Matrix<T>& dpos = grads.at("pos_embed");
    for (Eigen::Index t = 0; t < dx.rows(); ++t) {
      dtok.row(ids[static_cast<std::size_t>(t)]) += dx.row(t);
      dpos.row(t) += dx.row(t);
    }
  }
}

}  // namespace

template <typename T>
Matrix<T> forward(const ModelParams<T>& params, const LoraAdapter<T>* adapter, std::span<const int> ids) {
  const Matrix<T> xf = run_blocks<T>(params, adapter, ids, nullptr);
  Matrix<T> logits(xf.rows(), params.config.vocab_size);
  logits.noalias() = xf * params.at("lm_head.weight").transpose();
  return logits;
}

template <typename T>
GradientAccumulator<T>::GradientAccumulator(const ModelParams<T>& params, const LoraAdapter<T>* adapter,
                                            Trainable trainable)
    : params_(params), adapter_(adapter), trainable_(trainable) {
  if (trainable == Trainable::Adapter) {
    require(adapter != nullptr, ErrorKind::PreconditionViolation, "adapter training needs an adapter");
  } else {
    require(adapter == nullptr, ErrorKind::PreconditionViolation, "base training runs without an adapter");
  }
  reset();
}

template <typename T>
void GradientAccumulator<T>::reset() {
  loss_sum_ = 0;
  tokens_ = 0;
  grad_sum_.clear();
  const NamedTensors<T>& source = trainable_ == Trainable::Adapter ? adapter_->tensors : params_.tensors;
  for (const auto& [name, m] : source) grad_sum_.emplace(name, Matrix<T>::Zero(m.rows(), m.cols()));
}

template <typename T>
void GradientAccumulator<T>::add(const TokenSequence& seq) {
  require(seq.mask.size() == seq.ids.size(), ErrorKind::ShapeMismatch, "mask length differs from sequence length");
  std::size_t count = 0;
  for (std::size_t t = 1; t < seq.mask.size(); ++t) count += seq.mask[t] ? 1 : 0;
  if (count == 0) return;

  Tape<T> tape;
  const Matrix<T> xf = run_blocks<T>(params_, adapter_, seq.ids, &tape);
  const Matrix<T>& head = params_.at("lm_head.weight");
  Matrix<T> logits(xf.rows(), params_.config.vocab_size);
  logits.noalias() = xf * head.transpose();

  Matrix<T> dlogits = Matrix<T>::Zero(logits.rows(), logits.cols());
  T loss = 0;
  for (std::size_t t = 1; t < seq.ids.size(); ++t) {
    if (!seq.mask[t]) continue;
    const auto row = logits.row(static_cast<Eigen::Index>(t - 1));
    const T max = row.maxCoeff();
    const auto shifted = (row.array() - max).exp();
    const T sum = shifted.sum();
    loss += std::log(sum) + max - row(seq.ids[t]);
    auto drow = dlogits.row(static_cast<Eigen::Index>(t - 1));
    drow = shifted.matrix() / sum;
    drow(seq.ids[t]) -= 1;
  }
  backward<T>(params_, adapter_, seq.ids, tape, dlogits, grad_sum_, trainable_);
  loss_sum_ += loss;
  tokens_ += count;
}

template <typename T>
LossAndGrads<T> GradientAccumulator<T>::mean() const {
  require(tokens_ > 0, ErrorKind::PreconditionViolation, "no masked target tokens in batch");
  LossAndGrads<T> out;
  out.tokens = tokens_;
  const T inv = static_cast<T>(1) / static_cast<T>(tokens_);
  out.loss = loss_sum_ * inv;
  for (const auto& [name, g] : grad_sum_) out.grads.emplace(name, g * inv);
  return out;
}

template <typename T>
LossAndGrads<T> loss_and_grads(const ModelParams<T>& params, const LoraAdapter<T>* adapter,
                               std::span<const TokenSequence> batch, Trainable trainable) {
  GradientAccumulator<T> acc(params, adapter, trainable);
  for (const auto& seq : batch) acc.add(seq);
  LossAndGrads<T> out = acc.mean();
  if (!std::isfinite(out.loss)) throw AnomalyDetected("loss", 0);
  nan_guard(out.grads);
  return out;
}

template <typename T>
std::vector<int> generate(const ModelParams<T>& params, const LoraAdapter<T>* adapter, std::span<const int> prompt,
                          int max_new, int eos_id) {
  require(max_new >= 0, ErrorKind::PreconditionViolation, "max_new must be >= 0");
  require(!prompt.empty(), ErrorKind::PreconditionViolation, "generation needs a non-empty prompt");
  if (static_cast<long>(prompt.size()) + max_new > params.config.max_seq_len) {
    throw Error(ErrorKind::SequenceTooLong, "prompt + max_new exceeds max_seq_len");
  }
  std::vector<int> ids(prompt.begin(), prompt.end());
  std::vector<int> out;
  const Matrix<T>& head = params.at("lm_head.weight");
  for (int step = 0; step < max_new; ++step) {
    const Matrix<T> xf = run_blocks<T>(params, adapter, ids, nullptr);
    const Eigen::Matrix<T, 1, Eigen::Dynamic> last = xf.row(xf.rows() - 1) * head.transpose();
    Eigen::Index best = 0;
    last.maxCoeff(&best);  // first maximum on ties
    const int next = static_cast<int>(best);
    if (next == eos_id) break;
    out.push_back(next);
    ids.push_back(next);
  }
  return out;
}

#define SC2LORA_INSTANTIATE(T)                                                                                      \
  template Matrix<T> forward<T>(const ModelParams<T>&, const LoraAdapter<T>*, std::span<const int>);               \
  template class GradientAccumulator<T>;                                                                            \
  template LossAndGrads<T> loss_and_grads<T>(const ModelParams<T>&, const LoraAdapter<T>*,                          \
                                             std::span<const TokenSequence>, Trainable);                            \
  template std::vector<int> generate<T>(const ModelParams<T>&, const LoraAdapter<T>*, std::span<const int>, int, int);

SC2LORA_INSTANTIATE(float)
SC2LORA_INSTANTIATE(double)
#undef SC2LORA_INSTANTIATE

}  // namespace sc2lora
