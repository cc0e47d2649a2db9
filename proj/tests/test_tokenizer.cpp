// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/catalog.hpp"
#include "sc2lora/pipeline.hpp"
#include "sc2lora/tokenizer.hpp"
#include "sc2lora/trainer.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>

using namespace sc2lora;

namespace {

const std::vector<QAPair>& corpus() {
  static const auto c = load_qa_corpus(default_data_dir() / "corpus" / "stage1_sample.jsonl");
  return c;
}

}  // namespace

TEST_CASE("pretokenize attaches one leading space and splits digits") {
  CHECK(Tokenizer::pretokenize("Result: win") == std::vector<std::string>{"Result", ":", " win"});
  CHECK(Tokenizer::pretokenize("next 42 actions") ==
        std::vector<std::string>{"next", " 4", "2", " actions"});
  CHECK(Tokenizer::pretokenize("a  b\n c") == std::vector<std::string>{"a", " ", " b", "\n", " c"});
  CHECK(Tokenizer::pretokenize("SC2 Build_Reactor_Factory_quick") ==
        std::vector<std::string>{"SC2", " Build_Reactor_Factory_quick"});
  CHECK(Tokenizer::pretokenize("").empty());
}

TEST_CASE("specials sit at fixed ids") {
  const Tokenizer tok = Tokenizer::build({"hello"});
  CHECK(tok.piece(Tokenizer::kPad) == "<pad>");
  CHECK(tok.piece(Tokenizer::kBos) == "<bos>");
  CHECK(tok.piece(Tokenizer::kEos) == "<eos>");
  CHECK(tok.piece(Tokenizer::kUnk) == "<unk>");
  for (int id = 0; id < tok.vocab_size(); ++id) CHECK(tok.id_of(tok.piece(id)) == id);
}

TEST_CASE("encode/decode round-trip on covered text") {
  const Tokenizer tok = Tokenizer::build({"Result: win", "Action 1: Train_Marine_quick"});
  for (const std::string s : {"Result: win", "Action 1: Train_Marine_quick\nResult: win", "", "12, 3!"}) {
    CHECK(tok.decode(tok.encode(s)) == s);
  }
  CHECK(tok.encode("").empty());
  const auto ids = tok.encode("Result: lose");
  CHECK(ids.back() == Tokenizer::kUnk);
  CHECK(tok.decode(ids) == "Result:<unk>");
}

TEST_CASE("every corpus word is in the domain vocabulary") {
  const ActionCatalog catalog = ActionCatalog::load_default("full");
  const Tokenizer tok = build_vocabulary(catalog, corpus());
  for (const auto& qa : corpus()) {
    for (const auto& text : {render_question(qa.question), render_answer(qa.answer)}) {
      const auto ids = tok.encode(text);
      for (int id : ids) CHECK(id != Tokenizer::kUnk);
      CHECK(tok.decode(ids) == text);
    }
  }
  for (Race race : kAllRaces) {
    for (const auto& name : catalog.names(race)) CHECK(tok.encode(" " + name).size() == 1);
  }
}

TEST_CASE("tokenizer save/load") {
  const Tokenizer tok = Tokenizer::build({"alpha beta", "gamma"});
  const auto path = std::filesystem::temp_directory_path() / "sc2lora_tok.json";
  tok.save(path);
  CHECK(Tokenizer::load(path) == tok);
}
