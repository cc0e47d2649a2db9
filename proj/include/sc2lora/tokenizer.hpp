// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sc2lora {

// Word-level tokenizer. A word, a single digit or a single punctuation byte
// may carry one leading space; other whitespace bytes are tokens of their
// own. Decoding concatenates token strings, so encode/decode is the identity
// on text whose pieces are all in the vocabulary.
class Tokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Tokenizer();

  // Vocabulary = specials + digits/whitespace/ASCII punctuation + every piece
  // found in `texts`, in sorted order.
  static Tokenizer build(const std::vector<std::string>& texts);

  static std::vector<std::string> pretokenize(std::string_view text);

  std::vector<int> encode(std::string_view text) const;
  // Special tokens other than UNK decode to nothing; UNK decodes to "<unk>".
  std::string decode(const std::vector<int>& ids) const;

  int vocab_size() const { return static_cast<int>(tokens_.size()); }
  int id_of(std::string_view piece) const;  // kUnk when absent
  const std::string& piece(int id) const;

  void save(const std::filesystem::path& path) const;
  static Tokenizer load(const std::filesystem::path& path);

  bool operator==(const Tokenizer& other) const { return tokens_ == other.tokens_; }

 private:
  void add(const std::string& piece);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace sc2lora
