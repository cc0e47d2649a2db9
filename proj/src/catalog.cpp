// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/catalog.hpp"

#include "sc2lora/errors.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>

namespace sc2lora {

void ActionCatalog::add_race(Race race, const std::map<int, std::string>& actions) {
  require(!tables_.contains(race), ErrorKind::InvariantViolation,
          "catalog already has race " + std::string(race_name(race)));
  Table table;
  for (const auto& [id, name] : actions) {
    require(!name.empty() && name.find_first_of(" \t\r\n") == std::string::npos, ErrorKind::InvariantViolation,
            "action names must be non-empty and contain no whitespace: '" + name + "'");
    require(table.by_name.emplace(name, id).second, ErrorKind::InvariantViolation,
            "duplicate action name '" + name + "'");
    table.by_id.emplace(id, name);
  }
  tables_.emplace(race, std::move(table));
}

void ActionCatalog::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFile(path.string(), 0, e.what());
  }
  if (!doc.is_object() || !doc.contains("race") || !doc.contains("actions") || !doc["actions"].is_object()) {
    throw MalformedFile(path.string(), 0, "expected {\"race\": ..., \"actions\": {...}}");
  }
  std::map<int, std::string> actions;
  for (const auto& [key, value] : doc["actions"].items()) {
    char* end = nullptr;
    const long id = std::strtol(key.c_str(), &end, 10);
    if (end == key.c_str() || *end != '\0' || !value.is_string()) {
      throw MalformedFile(path.string(), 0, "bad action entry '" + key + "'");
    }
    if (!actions.emplace(static_cast<int>(id), value.get<std::string>()).second) {
      throw Error(ErrorKind::InvariantViolation, path.string() + ": duplicate action id " + key);
    }
  }
  add_race(race_from_name(doc["race"].get<std::string>()), actions);
}

ActionCatalog ActionCatalog::load_dir(const std::filesystem::path& dir, std::string_view variant) {
  ActionCatalog catalog;
  for (Race race : kAllRaces) {
    std::string file(race_name(race));
    for (char& c : file) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    catalog.load_file(dir / (file + "_" + std::string(variant) + ".json"));
  }
  return catalog;
}

ActionCatalog ActionCatalog::load_default(std::string_view variant) {
  return load_dir(default_data_dir() / "catalogs", variant);
}

bool ActionCatalog::has_race(Race race) const { return tables_.contains(race); }

bool ActionCatalog::contains(Race race, int id) const {
  auto it = tables_.find(race);
  return it != tables_.end() && it->second.by_id.contains(id);
}

std::size_t ActionCatalog::size(Race race) const { return table(race).by_id.size(); }

const ActionCatalog::Table& ActionCatalog::table(Race race) const {
  auto it = tables_.find(race);
  if (it == tables_.end()) throw Error(ErrorKind::UnknownAction, "no catalog for race " + std::string(race_name(race)));
  return it->second;
}

const std::string& ActionCatalog::action_name(Race race, int id) const {
  const Table& t = table(race);
  auto it = t.by_id.find(id);
  if (it == t.by_id.end()) {
    throw Error(ErrorKind::UnknownAction, std::string(race_name(race)) + " action id " + std::to_string(id));
  }
  return it->second;
}

int ActionCatalog::action_id(Race race, std::string_view name) const {
  const Table& t = table(race);
  auto it = t.by_name.find(name);
  if (it == t.by_name.end()) {
    throw Error(ErrorKind::UnknownAction, std::string(race_name(race)) + " action '" + std::string(name) + "'");
  }
  return it->second;
}

std::vector<int> ActionCatalog::ids(Race race) const {
  std::vector<int> out;
  for (const auto& [id, name] : table(race).by_id) out.push_back(id);
  return out;
}

std::vector<std::string> ActionCatalog::names(Race race) const {
  std::vector<std::string> out;
  for (const auto& [id, name] : table(race).by_id) out.push_back(name);
  return out;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("SC2LORA_DATA_DIR")) return env;
  return SC2LORA_DATA_DIR;
}

}  // namespace sc2lora
