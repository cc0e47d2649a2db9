// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line entry points for the desk-scale pipeline:
//   prepare-data -> init-base -> train-stage1 -> merge-adapter -> train-stage2 -> evaluate

#include "sc2lora/checkpoint.hpp"
#include "sc2lora/config.hpp"
#include "sc2lora/errors.hpp"
#include "sc2lora/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace sc2lora;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out_dir = ".";
};

nlohmann::json config_json(const Globals& g) {
  return g.config.empty() ? nlohmann::json::object() : load_json_file(g.config);
}

TrainConfig train_config(const Globals& g, const TrainConfig& defaults) {
  TrainConfig cfg = train_config_from_json(config_json(g), defaults);
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

EvalConfig eval_config(const Globals& g) {
  EvalConfig cfg = eval_config_from_json(config_json(g));
  if (g.seed) cfg.seed = *g.seed;
  if (g.threads) cfg.threads = *g.threads;
  cfg.validate();
  return cfg;
}

fs::path out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

void write_log(const Globals& g, const TrainLog& log, const std::string& stem) {
  log.write_csv(out_path(g, stem + "_log.csv"));
  log.write_summary(out_path(g, stem + "_summary.json"));
  std::cout << stem << ": " << log.total_steps << " steps, final loss " << log.final_loss << ", "
            << log.wall_seconds << " s\n";
}

std::vector<Replay> load_test_replays(const std::string& dir) {
  auto replays = load_replay_dir(dir);
  require(!replays.empty(), ErrorKind::PreconditionViolation, "no replays in " + dir);
  return replays;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage LoRA fine-tuning of a small decoder for StarCraft II macromanagement prediction"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON config for the subcommand; flags override it")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for every stochastic step");
  app.add_option("--threads", g.threads, "Worker threads for evaluation")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "Directory for artifacts");

  // prepare-data
  auto* prep = app.add_subcommand("prepare-data", "Write replays, the stage-1 corpus and stage-2 prompt pairs");
  std::string prep_matchup = "TvT";
  int prep_n = 16;
  int prep_steps = 3;
  int prep_horizon = 4;
  std::string prep_from;
  std::string prep_catalog = "full";
  prep->add_option("--matchup", prep_matchup, "Match-up such as TvT");
  prep->add_option("--n", prep_n, "Number of replays")->check(CLI::PositiveNumber);
  prep->add_option("--steps-per-replay", prep_steps, "Sampled steps per replay")->check(CLI::PositiveNumber);
  prep->add_option("--horizon", prep_horizon, "Actions to predict per step")->check(CLI::PositiveNumber);
  prep->add_option("--from", prep_from, "Subset validated replays from this directory instead of synthesizing");
  prep->add_option("--catalog", prep_catalog, "Action catalog variant")->check(CLI::IsMember({"full", "mini"}));

  // init-base
  auto* init = app.add_subcommand("init-base", "Build the vocabulary and pretrain a desk-scale base model");
  std::string init_corpus = (default_data_dir() / "corpus" / "stage1_sample.jsonl").string();
  std::string init_out = "base";
  int init_epochs = 0;
  init->add_option("--corpus", init_corpus, "Stage-1 style Q/A corpus (JSONL)")->check(CLI::ExistingFile);
  init->add_option("--out", init_out, "Checkpoint directory name under --out-dir");
  init->add_option("--epochs", init_epochs, "Override pretraining epochs");

  // train-stage1
  auto* s1 = app.add_subcommand("train-stage1", "Train a LoRA adapter on the Q/A corpus");
  std::string s1_base, s1_corpus = init_corpus, s1_out = "stage1_adapter";
  s1->add_option("--base", s1_base, "Base checkpoint")->required()->check(CLI::ExistingDirectory);
  s1->add_option("--corpus", s1_corpus, "Q/A corpus (JSONL)")->check(CLI::ExistingFile);
  s1->add_option("--out", s1_out, "Adapter directory name under --out-dir");

  // merge-adapter
  auto* mg = app.add_subcommand("merge-adapter", "Fold an adapter into its base checkpoint");
  std::string mg_base, mg_adapter, mg_out = "merged";
  mg->add_option("--base", mg_base, "Base checkpoint")->required()->check(CLI::ExistingDirectory);
  mg->add_option("--adapter", mg_adapter, "Adapter directory")->required()->check(CLI::ExistingDirectory);
  mg->add_option("--out", mg_out, "Checkpoint directory name under --out-dir");

  // train-stage2
  auto* s2 = app.add_subcommand("train-stage2", "Train a match-up adapter on compiled replay prompts");
  std::string s2_base, s2_prompts, s2_out = "stage2_adapter";
  s2->add_option("--base", s2_base, "Merged stage-1 checkpoint")->required()->check(CLI::ExistingDirectory);
  s2->add_option("--prompts", s2_prompts, "Prompt pairs (JSONL)")->required()->check(CLI::ExistingFile);
  s2->add_option("--out", s2_out, "Adapter directory name under --out-dir");

  // evaluate / zero-shot-eval
  std::string ev_base, ev_adapter, ev_replays, ev_out = "eval";
  std::string ev_catalog = "full";
  auto* ev = app.add_subcommand("evaluate", "Score a model (and optional adapter) on test replays");
  auto* zs = app.add_subcommand("zero-shot-eval", "Score an adapter on replays of a different match-up");
  for (auto* sub : {ev, zs}) {
    sub->add_option("--base", ev_base, "Base checkpoint")->required()->check(CLI::ExistingDirectory);
    auto* a = sub->add_option("--adapter", ev_adapter, "Adapter directory")->check(CLI::ExistingDirectory);
    if (sub == zs) a->required();
    sub->add_option("--replays", ev_replays, "Directory of test replays")->required()->check(CLI::ExistingDirectory);
    sub->add_option("--out", ev_out, "Report file stem under --out-dir");
    sub->add_option("--catalog", ev_catalog, "Action catalog variant")->check(CLI::IsMember({"full", "mini"}));
  }

  // predict
  auto* pr = app.add_subcommand("predict", "Generate one completion for an ad-hoc instruction");
  std::string pr_base, pr_adapter, pr_prompt, pr_prompt_file;
  int pr_max_new = 48;
  pr->add_option("--base", pr_base, "Checkpoint")->required()->check(CLI::ExistingDirectory);
  pr->add_option("--adapter", pr_adapter, "Adapter directory")->check(CLI::ExistingDirectory);
  auto* pr_text = pr->add_option("--prompt", pr_prompt, "Instruction text");
  auto* pr_file = pr->add_option("--prompt-file", pr_prompt_file, "File holding the instruction")
                      ->check(CLI::ExistingFile);
  pr_text->excludes(pr_file);
  pr->add_option("--max-new", pr_max_new, "Maximum generated tokens")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*prep) {
      const MatchUp matchup = MatchUp::parse(prep_matchup);
      const ActionCatalog catalog = ActionCatalog::load_default(prep_catalog);
      const std::uint64_t seed = g.seed.value_or(0);
      std::vector<Replay> replays;
      if (prep_from.empty()) {
        SynthesisOptions opts;
        opts.steps_per_replay = prep_steps;
        opts.horizon = prep_horizon;
        replays = synthesize_replays(matchup, prep_n, seed, catalog, opts);
      } else {
        std::vector<Replay> pool;
        for (auto& r : load_replay_dir(prep_from)) {
          if (r.matchup == matchup && validate_replay(r).passed) pool.push_back(std::move(r));
        }
        replays = subset_replays(pool, static_cast<std::size_t>(prep_n), seed);
      }
      const fs::path replay_dir = out_path(g, "replays");
      fs::remove_all(replay_dir);
      write_replay_dir(replays, replay_dir);
      const auto pairs = compile_replays(replays, catalog, {}, prep_horizon);
      write_prompt_pairs(pairs, out_path(g, "prompts.jsonl"));
      fs::copy_file(default_data_dir() / "corpus" / "stage1_sample.jsonl", out_path(g, "stage1_corpus.jsonl"),
                    fs::copy_options::overwrite_existing);
      const auto corpus = load_qa_corpus(out_path(g, "stage1_corpus.jsonl"));
      std::cout << "replays " << replays.size() << "\nprompt_pairs " << pairs.size() << "\nstage1_pairs "
                << corpus.size() << '\n';
    } else if (*init) {
      nlohmann::json doc = config_json(g);
      BaseSpec spec;
      spec.train = default_base_train_config();
      if (doc.contains("model")) spec.model = model_config_from_json(doc.at("model"));
      if (doc.contains("train")) spec.train = train_config_from_json(doc.at("train"), spec.train);
      if (doc.contains("replays_per_matchup")) spec.replays_per_matchup = doc.at("replays_per_matchup").get<int>();
      if (g.seed) {
        spec.train.seed = *g.seed;
        spec.init_seed = *g.seed;
      }
      if (init_epochs > 0) spec.train.epochs = init_epochs;
      const ActionCatalog catalog = ActionCatalog::load_default("full");
      const auto corpus = load_qa_corpus(init_corpus);
      const PretrainedBase base = build_base(catalog, corpus, spec);
      save_checkpoint(out_path(g, init_out), base.params, base.tokenizer);
      write_log(g, base.log, init_out);
    } else if (*s1) {
      const TrainConfig cfg = train_config(g, default_stage1_config());
      const Checkpoint base = load_checkpoint(s1_base);
      const auto run = train_stage1(base.params(), base.tokenizer, load_qa_corpus(s1_corpus), cfg);
      save_adapter(out_path(g, s1_out), run.adapter);
      write_log(g, run.log, s1_out);
    } else if (*mg) {
      const Checkpoint base = load_checkpoint(mg_base);
      const LoraAdapter<float> adapter = load_adapter(mg_adapter);
      save_checkpoint(out_path(g, mg_out), merge(adapter, base.params()), base.tokenizer);
      std::cout << "merged " << adapter.layers.size() << " layers into " << out_path(g, mg_out).string() << '\n';
    } else if (*s2) {
      const TrainConfig cfg = train_config(g, default_stage2_config());
      const Checkpoint base = load_checkpoint(s2_base);
      const auto run = train_stage2(base.params(), base.tokenizer, load_prompt_pairs(s2_prompts), cfg);
      save_adapter(out_path(g, s2_out), run.adapter);
      write_log(g, run.log, s2_out);
    } else if (*ev || *zs) {
      const EvalConfig cfg = eval_config(g);
      const Checkpoint base = load_checkpoint(ev_base);
      const ActionCatalog catalog = ActionCatalog::load_default(ev_catalog);
      const auto replays = load_test_replays(ev_replays);
      std::optional<LoraAdapter<float>> adapter;
      if (!ev_adapter.empty()) adapter = load_adapter(ev_adapter);
      const EvalReport report =
          *zs ? zero_shot_eval(base.params(), *adapter, base.tokenizer, replays, catalog, cfg)
              : evaluate(base.params(), adapter ? &*adapter : nullptr, base.tokenizer, replays, catalog, cfg);
      report.write_json(out_path(g, ev_out + ".json"));
      report.write_csv(out_path(g, ev_out + ".csv"));
      std::cout << report.to_json() << '\n';
    } else if (*pr) {
      std::string text = pr_prompt;
      if (!pr_prompt_file.empty()) {
        std::ifstream in(pr_prompt_file);
        text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
        while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
      }
      if (text.empty()) throw Error(ErrorKind::PreconditionViolation, "predict needs --prompt or --prompt-file");
      const Checkpoint base = load_checkpoint(pr_base);
      std::optional<LoraAdapter<float>> adapter;
      if (!pr_adapter.empty()) adapter = load_adapter(pr_adapter);
      const auto params = base.params();
      const auto prompt = encode_prompt(base.tokenizer, text);
      const int room = params.config.max_seq_len - static_cast<int>(prompt.size());
      if (room < 1) throw Error(ErrorKind::SequenceTooLong, "prompt fills the context window");
      const auto ids = generate(params, adapter ? &*adapter : nullptr, prompt, std::min(pr_max_new, room),
                                Tokenizer::kEos);
      std::cout << base.tokenizer.decode(ids) << '\n';
    }
  } catch (const AnomalyDetected& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
