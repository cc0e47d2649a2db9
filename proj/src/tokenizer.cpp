// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/tokenizer.hpp"

#include "sc2lora/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace sc2lora {

namespace {

bool is_word_start(unsigned char c) { return std::isalpha(c) || c == '_'; }
bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_'; }
bool is_space(unsigned char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

const char* const kSpecials[] = {"<pad>", "<bos>", "<eos>", "<unk>"};

}  // namespace

Tokenizer::Tokenizer() {
  for (const char* s : kSpecials) add(s);
}

void Tokenizer::add(const std::string& piece) {
  if (ids_.contains(piece)) return;
  ids_.emplace(piece, static_cast<int>(tokens_.size()));
  tokens_.push_back(piece);
}

std::vector<std::string> Tokenizer::pretokenize(std::string_view text) {
  std::vector<std::string> pieces;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const std::size_t start = i;
    auto ch = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
    // A single leading space attaches to the piece that follows it.
    if (ch(i) == ' ' && i + 1 < n && !is_space(ch(i + 1))) ++i;
    if (is_space(ch(i))) {
      pieces.emplace_back(text.substr(start, 1));
      i = start + 1;
      continue;
    }
    if (is_word_start(ch(i))) {
      // Digits inside a word stay in it ("SC2"); a word never starts with one.
      ++i;
      while (i < n && is_word_char(ch(i))) ++i;
    } else {
      ++i;  // digit or punctuation byte
    }
    pieces.emplace_back(text.substr(start, i - start));
  }
  return pieces;
}

Tokenizer Tokenizer::build(const std::vector<std::string>& texts) {
  Tokenizer tok;
  std::set<std::string> base;
  for (const char* ws : {" ", "\n", "\t", "\r"}) base.insert(ws);
  for (int c = 33; c < 127; ++c) {
    if (std::isalpha(c) || c == '_') continue;
    base.insert(std::string(1, static_cast<char>(c)));
    base.insert(std::string(" ") + static_cast<char>(c));
  }
  for (const auto& b : base) tok.add(b);
  std::set<std::string> seen;
  for (const auto& t : texts) {
    for (auto& p : pretokenize(t)) seen.insert(std::move(p));
  }
  for (const auto& p : seen) tok.add(p);
  return tok;
}

std::vector<int> Tokenizer::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& p : pretokenize(text)) ids.push_back(id_of(p));
  return ids;
}

std::string Tokenizer::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    out += piece(id);
  }
  return out;
}

int Tokenizer::id_of(std::string_view piece) const {
  auto it = ids_.find(std::string(piece));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Tokenizer::piece(int id) const {
  if (id < 0 || id >= vocab_size()) throw Error(ErrorKind::OutOfRange, "token id " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

void Tokenizer::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << nlohmann::json{{"tokens", tokens_}}.dump(1) << '\n';
}

Tokenizer Tokenizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFile(path.string(), 0, e.what());
  }
  const auto tokens = doc.at("tokens").get<std::vector<std::string>>();
  if (tokens.size() < 4) throw MalformedFile(path.string(), 0, "vocabulary lacks special tokens");
  for (int i = 0; i < 4; ++i) {
    if (tokens[static_cast<std::size_t>(i)] != kSpecials[i]) throw MalformedFile(path.string(), 0, "special tokens out of place");
  }
  Tokenizer tok;
  for (std::size_t i = 4; i < tokens.size(); ++i) {
    if (tok.ids_.contains(tokens[i])) throw MalformedFile(path.string(), 0, "duplicate token '" + tokens[i] + "'");
    tok.add(tokens[i]);
  }
  return tok;
}

}  // namespace sc2lora
