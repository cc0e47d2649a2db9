// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/evaluator.hpp"

#include "sc2lora/errors.hpp"
#include "sc2lora/model.hpp"
#include "sc2lora/trainer.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <thread>

namespace sc2lora {

double build_order_accuracy(const Prediction& pred, const std::vector<std::string>& truth) {
  if (pred.actions.size() != truth.size()) {
    throw Error(ErrorKind::HorizonMismatch, "prediction horizon " + std::to_string(pred.actions.size()) +
                                                " vs truth horizon " + std::to_string(truth.size()));
  }
  require(!truth.empty(), ErrorKind::PreconditionViolation, "horizon must be >= 1");
  std::size_t hits = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (pred.actions[k] && *pred.actions[k] == truth[k]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double global_state_accuracy(const std::vector<Prediction>& preds, const std::vector<Outcome>& truths) {
  if (preds.size() != truths.size()) {
    throw Error(ErrorKind::LengthMismatch,
                std::to_string(preds.size()) + " predictions vs " + std::to_string(truths.size()) + " outcomes");
  }
  require(!preds.empty(), ErrorKind::PreconditionViolation, "global_state_accuracy needs at least one step");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].outcome && *preds[i].outcome == truths[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

void EvalConfig::validate() const {
  if (horizon < 1) throw Error(ErrorKind::ConfigInvalid, "horizon must be >= 1");
  if (max_new_tokens < 1) throw Error(ErrorKind::ConfigInvalid, "max_new_tokens must be >= 1");
  if (max_steps < 0) throw Error(ErrorKind::ConfigInvalid, "max_steps must be >= 0");
  if (threads < 1) throw Error(ErrorKind::ConfigInvalid, "threads must be >= 1");
}

std::string EvalReport::to_json() const {
  nlohmann::json doc = {{"matchup", matchup},
                        {"gs_accuracy", gs_accuracy},
                        {"bo_accuracy", bo_accuracy},
                        {"n_steps", n_steps},
                        {"per_action_position_accuracy", per_action_position_accuracy},
                        {"parse_failure_rate", parse_failure_rate}};
  if (!adapter_matchup.empty()) {
    doc["adapter_matchup"] = adapter_matchup;
    doc["adapter_hash"] = adapter_hash;
  }
  return doc.dump(1);
}

void EvalReport::write_json(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << to_json() << '\n';
}

void EvalReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "replay_index,step_index";
  for (std::size_t k = 0; k < per_action_position_accuracy.size(); ++k) out << ",action_" << k + 1 << "_hit";
  out << ",outcome_hit,parse_ok\n";
  for (const auto& s : steps) {
    out << s.replay_index << ',' << s.step_index;
    for (auto h : s.action_hits) out << ',' << int(h);
    out << ',' << int(s.outcome_hit) << ',' << int(s.parse_ok) << '\n';
  }
}

namespace {

struct Job {
  int replay_index;
  int step_index;
  std::string instruction;
  std::vector<std::string> actions;
  Outcome outcome;
};

StepResult run_job(const Job& job, const ModelParams<float>& params, const LoraAdapter<float>* adapter,
                   const Tokenizer& tokenizer, const EvalConfig& cfg) {
  const std::vector<int> prompt = encode_prompt(tokenizer, job.instruction);
  const int room = params.config.max_seq_len - static_cast<int>(prompt.size());
  if (room < 1) throw Error(ErrorKind::SequenceTooLong, "prompt leaves no room for generation");
  const auto ids = generate(params, adapter, prompt, std::min(cfg.max_new_tokens, room), Tokenizer::kEos);
  StepResult r;
  r.replay_index = job.replay_index;
  r.step_index = job.step_index;
  r.generation = tokenizer.decode(ids);
  const Prediction pred = parse_generation(r.generation, cfg.horizon);
  r.parse_ok = pred.complete();
  for (std::size_t k = 0; k < job.actions.size(); ++k) {
    r.action_hits.push_back(pred.actions[k] && *pred.actions[k] == job.actions[k] ? 1 : 0);
  }
  r.outcome_hit = pred.outcome && *pred.outcome == job.outcome;
  return r;
}

}  // namespace

EvalReport evaluate(const ModelParams<float>& params, const LoraAdapter<float>* adapter, const Tokenizer& tokenizer,
                    const std::vector<Replay>& replays, const ActionCatalog& catalog, const EvalConfig& cfg) {
  cfg.validate();
  require(!replays.empty(), ErrorKind::PreconditionViolation, "no test replays");
  const MatchUp matchup = replays.front().matchup;
  if (adapter) {
    require(!adapter->matchup.empty(), ErrorKind::PreconditionViolation, "adapter has no recorded match-up");
  }

  std::vector<Job> jobs;
  for (std::size_t i = 0; i < replays.size(); ++i) {
    require(replays[i].matchup == matchup, ErrorKind::PreconditionViolation, "test replays mix match-ups");
    for (auto& pair : compile_replay(replays[i], static_cast<int>(i), catalog, cfg.describer, cfg.horizon)) {
      jobs.push_back({pair.meta.replay_index, pair.meta.step_index, std::move(pair.instruction),
                      std::move(pair.meta.actions), pair.meta.outcome});
    }
  }
  if (cfg.max_steps > 0 && static_cast<std::size_t>(cfg.max_steps) < jobs.size()) {
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> idx(jobs.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(cfg.max_steps));
    std::sort(idx.begin(), idx.end());
    std::vector<Job> picked;
    for (auto i : idx) picked.push_back(std::move(jobs[i]));
    jobs = std::move(picked);
  }

  // Results land in fixed slots, so the aggregate is independent of the
  // thread count.
  std::vector<StepResult> results(jobs.size());
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), jobs.size());
  if (n_threads <= 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) results[j] = run_job(jobs[j], params, adapter, tokenizer, cfg);
  } else {
    std::vector<std::exception_ptr> errors(n_threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t j = t; j < jobs.size(); j += n_threads) {
            results[j] = run_job(jobs[j], params, adapter, tokenizer, cfg);
          }
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  EvalReport report;
  report.matchup = matchup.str();
  report.n_steps = results.size();
  if (adapter) {
    report.adapter_matchup = adapter->matchup;
    report.adapter_hash = tensor_hash(adapter->tensors);
  }
  const auto h = static_cast<std::size_t>(cfg.horizon);
  std::vector<std::size_t> position_hits(h, 0);
  std::size_t outcome_hits = 0;
  std::size_t parse_failures = 0;
  for (const auto& r : results) {
    for (std::size_t k = 0; k < h; ++k) position_hits[k] += r.action_hits[k];
    outcome_hits += r.outcome_hit;
    parse_failures += !r.parse_ok;
  }
  const double n = static_cast<double>(std::max<std::size_t>(results.size(), 1));
  std::size_t all_hits = 0;
  for (std::size_t k = 0; k < h; ++k) {
    report.per_action_position_accuracy.push_back(static_cast<double>(position_hits[k]) / n);
    all_hits += position_hits[k];
  }
  report.bo_accuracy = static_cast<double>(all_hits) / (n * static_cast<double>(h));
  report.gs_accuracy = static_cast<double>(outcome_hits) / n;
  report.parse_failure_rate = static_cast<double>(parse_failures) / n;
  report.steps = std::move(results);
  return report;
}

EvalReport zero_shot_eval(const ModelParams<float>& params, const LoraAdapter<float>& adapter,
                          const Tokenizer& tokenizer, const std::vector<Replay>& replays, const ActionCatalog& catalog,
                          const EvalConfig& cfg) {
  require(!replays.empty(), ErrorKind::PreconditionViolation, "no test replays");
  require(!adapter.matchup.empty(), ErrorKind::PreconditionViolation, "adapter has no recorded match-up");
  if (MatchUp::parse(adapter.matchup) == replays.front().matchup) {
    throw Error(ErrorKind::SameMatchup, "adapter was trained on " + adapter.matchup + "; zero-shot needs another");
  }
  const std::uint64_t before = tensor_hash(adapter.tensors);
  EvalReport report = evaluate(params, &adapter, tokenizer, replays, catalog, cfg);
  if (tensor_hash(adapter.tensors) != before) {
    throw Error(ErrorKind::InvariantViolation, "adapter tensors changed during zero-shot evaluation");
  }
  return report;
}

}  // namespace sc2lora
