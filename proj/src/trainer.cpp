// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/trainer.hpp"

#include "sc2lora/errors.hpp"
#include "sc2lora/quant.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

namespace sc2lora {

void TrainConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::ConfigInvalid, what);
  };
  check(std::isfinite(peak_lr) && peak_lr > 0, "peak_lr must be > 0");
  check(epochs >= 1, "epochs must be >= 1");
  check(warmup_steps >= 1, "warmup_steps must be >= 1");
  check(grad_accum_steps >= 1, "grad_accum_steps must be >= 1");
  check(batch_size >= 1, "batch_size must be >= 1");
  check(max_tokens >= 2, "max_tokens must be >= 2");
  check(lora.rank >= 1, "lora.rank must be >= 1");
  check(std::isfinite(lora.alpha) && lora.alpha > 0, "lora.alpha must be > 0");
  check(weight_decay >= 0, "weight_decay must be >= 0");
  check(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, "betas must lie in [0, 1)");
  check(eps > 0, "eps must be > 0");
}

double lr_at(long step, long total_steps, const TrainConfig& cfg) {
  require(step >= 0 && step <= total_steps, ErrorKind::PreconditionViolation, "lr_at: step outside [0, total]");
  require(cfg.warmup_steps < total_steps, ErrorKind::PreconditionViolation, "lr_at: warmup_steps must be < total");
  const double w = cfg.warmup_steps;
  if (step < cfg.warmup_steps) return cfg.peak_lr * static_cast<double>(step) / w;
  const double progress = (static_cast<double>(step) - w) / (static_cast<double>(total_steps) - w);
  return cfg.peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

template <typename T>
void adamw_step(NamedTensors<T>& params, const NamedTensors<T>& grads, AdamWState<T>& state, long step, double lr,
                double beta1, double beta2, double eps, double weight_decay) {
  require(step >= 1, ErrorKind::PreconditionViolation, "adamw_step: step counts from 1");
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw Error(ErrorKind::MissingLayer, "adamw_step: no parameter '" + name + "'");
    if (it->second.rows() != g.rows() || it->second.cols() != g.cols()) {
      throw Error(ErrorKind::ShapeMismatch, "adamw_step: gradient shape differs for '" + name + "'");
    }
    nan_guard(name, g, step - 1);
  }
  const T b1 = static_cast<T>(beta1);
  const T b2 = static_cast<T>(beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(beta1, static_cast<double>(step)));
  const T c2 = static_cast<T>(1.0 - std::pow(beta2, static_cast<double>(step)));
  const T lr_t = static_cast<T>(lr);
  const T eps_t = static_cast<T>(eps);
  const T decay = static_cast<T>(lr * weight_decay);
  for (const auto& [name, g] : grads) {
    Matrix<T>& w = params.at(name);
    auto [mit, m_new] = state.m.try_emplace(name, Matrix<T>::Zero(g.rows(), g.cols()));
    auto [vit, v_new] = state.v.try_emplace(name, Matrix<T>::Zero(g.rows(), g.cols()));
    Matrix<T>& m = mit->second;
    Matrix<T>& v = vit->second;
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.cwiseProduct(g);
    if (decay != T(0)) w -= decay * w;
    w.array() -= lr_t * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_t);
  }
}

std::vector<QAPair> load_qa_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<QAPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      out.push_back({obj.at("question").get<std::string>(), obj.at("answer").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw MalformedFile(path.string(), line_no, e.what());
    }
  }
  return out;
}

std::string render_question(const std::string& question) { return "Instruct: " + question; }
std::string render_answer(const std::string& answer) { return "Output: " + answer; }

std::vector<int> encode_prompt(const Tokenizer& tokenizer, const std::string& instruction) {
  std::vector<int> ids{Tokenizer::kBos};
  const auto body = tokenizer.encode(instruction + "\n");
  ids.insert(ids.end(), body.begin(), body.end());
  return ids;
}

TokenSequence build_sequence(const Tokenizer& tokenizer, const std::string& instruction, const std::string& target,
                             int max_tokens) {
  TokenSequence seq;
  seq.ids = encode_prompt(tokenizer, instruction);
  seq.mask.assign(seq.ids.size(), 0);
  auto answer = tokenizer.encode(target);
  answer.push_back(Tokenizer::kEos);
  for (int id : answer) {
    seq.ids.push_back(id);
    seq.mask.push_back(1);
  }
  if (seq.ids.size() > static_cast<std::size_t>(max_tokens)) {
    seq.ids.resize(static_cast<std::size_t>(max_tokens));
    seq.mask.resize(static_cast<std::size_t>(max_tokens));
    if (std::find(seq.mask.begin(), seq.mask.end(), std::uint8_t{1}) == seq.mask.end()) {
      throw Error(ErrorKind::SequenceTooLong, "instruction alone fills max_tokens = " + std::to_string(max_tokens));
    }
  }
  return seq;
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "step,lr,loss\n";
  out.precision(17);
  for (const auto& e : entries) out << e.step << ',' << e.lr << ',' << e.loss << '\n';
}

void TrainLog::write_summary(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  nlohmann::json doc = {{"total_steps", total_steps},
                        {"final_loss", final_loss},
                        {"initial_loss", entries.empty() ? 0.0 : entries.front().loss},
                        {"wall_seconds", wall_seconds}};
  out << doc.dump(1) << '\n';
}

long total_steps(std::size_t n_examples, const TrainConfig& cfg) {
  const std::size_t group = static_cast<std::size_t>(cfg.batch_size) * static_cast<std::size_t>(cfg.grad_accum_steps);
  return static_cast<long>(cfg.epochs) * static_cast<long>((n_examples + group - 1) / group);
}

namespace {

std::vector<TokenSequence> clamp_lengths(std::vector<TokenSequence> data, int max_tokens) {
  for (auto& seq : data) {
    require(seq.ids.size() == seq.mask.size(), ErrorKind::ShapeMismatch, "token/mask length differ");
    if (seq.ids.size() > static_cast<std::size_t>(max_tokens)) {
      seq.ids.resize(static_cast<std::size_t>(max_tokens));
      seq.mask.resize(static_cast<std::size_t>(max_tokens));
    }
  }
  return data;
}

// Runs epochs x ceil(N / (batch * accum)) optimizer steps. Each step sums
// the loss and gradients of batch * accum examples (accum micro-batches of
// `batch`) and divides once by the total masked-token count.
TrainLog run_loop(const ModelParams<float>& params, const LoraAdapter<float>* adapter, Trainable trainable,
                  const std::vector<TokenSequence>& raw, const TrainConfig& cfg, NamedTensors<float>& target) {
  require(!raw.empty(), ErrorKind::PreconditionViolation, "training corpus is empty");
  const auto start = std::chrono::steady_clock::now();
  const int max_tokens = std::min(cfg.max_tokens, params.config.max_seq_len);
  const std::vector<TokenSequence> data = clamp_lengths(raw, max_tokens);
  const long total = total_steps(data.size(), cfg);
  if (cfg.warmup_steps >= total) {
    throw Error(ErrorKind::ConfigInvalid, "warmup_steps (" + std::to_string(cfg.warmup_steps) +
                                              ") must be below the total step count (" + std::to_string(total) + ")");
  }
  const std::size_t group = static_cast<std::size_t>(cfg.batch_size) * static_cast<std::size_t>(cfg.grad_accum_steps);

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(data.size());
  AdamWState<float> state;
  GradientAccumulator<float> acc(params, adapter, trainable);
  TrainLog log;
  log.total_steps = total;
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += group) {
      const std::size_t end = std::min(order.size(), begin + group);
      acc.reset();
      for (std::size_t i = begin; i < end; ++i) acc.add(data[order[i]]);
      if (acc.tokens() == 0) continue;
      const double lr = lr_at(step, total, cfg);
      LossAndGrads<float> lg;
      try {
        lg = acc.mean();
        if (!std::isfinite(lg.loss)) throw AnomalyDetected("loss", 0, step);
        nan_guard(lg.grads, step);
        adamw_step(target, lg.grads, state, step + 1, lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay);
        nan_guard(target, step);
      } catch (const AnomalyDetected& e) {
        throw AnomalyDetected(e.tensor(), e.index(), step);
      }
      log.entries.push_back({step, lr, static_cast<double>(lg.loss)});
      ++step;
    }
  }
  log.total_steps = step;
  log.final_loss = log.entries.empty() ? 0.0 : log.entries.back().loss;
  log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return log;
}

}  // namespace

AdapterRun train_adapter(const ModelParams<float>& base, const std::vector<TokenSequence>& data,
                         const TrainConfig& cfg) {
  cfg.validate();
  require(!data.empty(), ErrorKind::PreconditionViolation, "training corpus is empty");
  // The quantized base is held as int8 and dequantized for use; the
  // caller's tensors are never touched.
  const ModelParams<float> quantized =
      cfg.quantize_base ? dequantize_model(quantize_model(base, LayerSelector::all_linear())) : ModelParams<float>{};
  const ModelParams<float>& frozen = cfg.quantize_base ? quantized : base;
  AdapterRun run;
  run.adapter = attach(frozen, cfg.lora, cfg.seed);
  run.log = run_loop(frozen, &run.adapter, Trainable::Adapter, data, cfg, run.adapter.tensors);
  return run;
}

AdapterRun train_stage1(const ModelParams<float>& base, const Tokenizer& tokenizer, const std::vector<QAPair>& corpus,
                        const TrainConfig& cfg) {
  cfg.validate();
  require(!corpus.empty(), ErrorKind::PreconditionViolation, "stage-1 corpus is empty");
  const int max_tokens = std::min(cfg.max_tokens, base.config.max_seq_len);
  std::vector<TokenSequence> data;
  data.reserve(corpus.size());
  for (const auto& qa : corpus) {
    data.push_back(build_sequence(tokenizer, render_question(qa.question), render_answer(qa.answer), max_tokens));
  }
  return train_adapter(base, data, cfg);
}

AdapterRun train_stage2(const ModelParams<float>& merged_stage1, const Tokenizer& tokenizer,
                        const std::vector<PromptPair>& corpus, const TrainConfig& cfg) {
  cfg.validate();
  require(!corpus.empty(), ErrorKind::PreconditionViolation, "stage-2 corpus is empty");
  const MatchUp matchup = corpus.front().meta.matchup;
  const int max_tokens = std::min(cfg.max_tokens, merged_stage1.config.max_seq_len);
  std::vector<TokenSequence> data;
  data.reserve(corpus.size());
  for (const auto& pair : corpus) {
    require(pair.meta.matchup == matchup, ErrorKind::PreconditionViolation,
            "stage-2 corpus mixes match-ups " + matchup.str() + " and " + pair.meta.matchup.str());
    data.push_back(build_sequence(tokenizer, pair.instruction, pair.target, max_tokens));
  }
  AdapterRun run = train_adapter(merged_stage1, data, cfg);
  run.adapter.matchup = matchup.str();
  return run;
}

BaseRun pretrain_base(const ModelParams<float>& init, const std::vector<TokenSequence>& data, const TrainConfig& cfg) {
  cfg.validate();
  BaseRun run;
  run.params = init;
  run.log = run_loop(run.params, nullptr, Trainable::Base, data, cfg, run.params.tensors);
  return run;
}

template void adamw_step<float>(NamedTensors<float>&, const NamedTensors<float>&, AdamWState<float>&, long, double,
                                double, double, double, double);
template void adamw_step<double>(NamedTensors<double>&, const NamedTensors<double>&, AdamWState<double>&, long,
                                 double, double, double, double, double);

}  // namespace sc2lora
