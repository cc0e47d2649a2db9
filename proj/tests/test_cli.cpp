// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/errors.hpp"
#include "sc2lora/prompt.hpp"

#include <catch_amalgamated.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace sc2lora;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "sc2lora_test_cli";

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args) {
  fs::create_directories(kRoot);
  const fs::path log = kRoot / "last_output.txt";
  const std::string cmd = std::string(SC2LORA_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dir_bytes(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += fs::relative(f, dir).string() + "\n" + slurp(f);
  return all;
}

}  // namespace

TEST_CASE("prepare-data writes the requested replay set reproducibly") {
  const fs::path a = kRoot / "prep_a", b = kRoot / "prep_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const auto r1 = run("--out-dir " + a.string() + " --seed 7 prepare-data --matchup TvT --n 16");
  REQUIRE(r1.code == 0);
  CHECK(r1.out.find("replays 16") != std::string::npos);
  CHECK(r1.out.find("prompt_pairs 48") != std::string::npos);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a / "replays")) files += e.is_regular_file();
  CHECK(files == 16);
  REQUIRE(run("--out-dir " + b.string() + " --seed 7 prepare-data --matchup TvT --n 16").code == 0);
  CHECK(dir_bytes(a) == dir_bytes(b));
}

TEST_CASE("usage and config errors exit nonzero") {
  CHECK(run("--out-dir " + (kRoot / "zero").string() + " prepare-data --n 0").code != 0);
  CHECK(run("").code != 0);
  CHECK(run("prepare-data --matchup TxT").code != 0);
  const fs::path cfg = kRoot / "bad.json";
  std::ofstream(cfg) << R"({"peak_lr": 1e-3, "no_such_key": 1})";
  const auto r = run("--config " + cfg.string() + " train-stage1 --base " + kRoot.string());
  CHECK(r.code != 0);
  CHECK(r.out.find("no_such_key") != std::string::npos);
}

TEST_CASE("smoke pipeline: prepare, base, stage 1, merge, stage 2, evaluate, predict") {
  const fs::path d = kRoot / "pipeline";
  fs::remove_all(d);
  const std::string o = "--out-dir " + d.string() + " ";
  const auto start = std::chrono::steady_clock::now();

  REQUIRE(run(o + "--seed 3 prepare-data --matchup TvT --n 8").code == 0);
  auto r = run(o + "--seed 1 init-base");
  INFO(r.out);
  REQUIRE(r.code == 0);
  REQUIRE(run(o + "--seed 1 train-stage1 --base " + (d / "base").string() + " --corpus " +
              (d / "stage1_corpus.jsonl").string()).code == 0);
  const std::string merge_args =
      "merge-adapter --base " + (d / "base").string() + " --adapter " + (d / "stage1_adapter").string();
  REQUIRE(run(o + merge_args).code == 0);
  const std::string first = dir_bytes(d / "merged");
  REQUIRE(run(o + merge_args).code == 0);
  CHECK(dir_bytes(d / "merged") == first);

  REQUIRE(run(o + "--seed 1 train-stage2 --base " + (d / "merged").string() + " --prompts " +
              (d / "prompts.jsonl").string()).code == 0);
  for (const char* f : {"stage2_adapter/adapter.json", "stage2_adapter/adapter.bin", "stage2_adapter_log.csv",
                        "stage2_adapter_summary.json"}) {
    CHECK(fs::exists(d / f));
  }
  r = run(o + "evaluate --base " + (d / "merged").string() + " --adapter " + (d / "stage2_adapter").string() +
          " --replays " + (d / "replays").string());
  REQUIRE(r.code == 0);
  const auto report = nlohmann::json::parse(slurp(d / "eval.json"));
  std::cout << "smoke evaluate: " << report.dump() << '\n';
  CHECK(report.at("n_steps") == 24);
  CHECK(report.at("bo_accuracy").get<double>() >= 0.9);

  const std::string instruction =
      "Instruct: As an expert StarCraft II Terran player, playing against the Terran, predict the next 4 actions "
      "and also the result of the game, given the following resources:\n"
      "Game Stage: Mid, Army Count: low, Army Units/Buildings: 5 buildings\n"
      "Minerals collected: low, Minerals used: low, Vespene gas collected: low, Vespene gas used: low\n"
      "Food used: low, Food cap: low, Food for Army: low, Food for Workers: low\n"
      "Idle Workers: low, Warp gates count: low, Larva count: low.";
  std::ofstream(d / "table5_prompt.txt") << instruction << '\n';
  r = run(o + "predict --base " + (d / "merged").string() + " --adapter " + (d / "stage2_adapter").string() +
          " --prompt-file " + (d / "table5_prompt.txt").string());
  REQUIRE(r.code == 0);
  std::cout << "predict output:\n" << r.out;
  CHECK(r.out.rfind("Output:", 0) == 0);
  CHECK(parse_generation(r.out, 4).complete());

  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  std::cout << "smoke pipeline wall time: " << minutes << " min\n";
  CHECK(minutes < 10.0);
}
