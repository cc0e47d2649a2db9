// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sc2lora/replay.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sc2lora {

// Per-race bijection between action ids and action names.
class ActionCatalog {
 public:
  // Adds one race's table. Throws InvariantViolation on duplicate ids or
  // names, or if the race is already present.
  void add_race(Race race, const std::map<int, std::string>& actions);

  // Reads {"race": "...", "actions": {"75": "Build_Reactor_Factory_quick", ...}}.
  void load_file(const std::filesystem::path& path);

  // Loads <dir>/{terran,protoss,zerg}_<variant>.json, variant "full" or "mini".
  static ActionCatalog load_dir(const std::filesystem::path& dir, std::string_view variant);
  static ActionCatalog load_default(std::string_view variant);

  bool has_race(Race race) const;
  bool contains(Race race, int id) const;
  std::size_t size(Race race) const;

  const std::string& action_name(Race race, int id) const;  // throws UnknownAction
  int action_id(Race race, std::string_view name) const;    // throws UnknownAction

  // Ids in ascending order.
  std::vector<int> ids(Race race) const;
  std::vector<std::string> names(Race race) const;

 private:
  struct Table {
    std::map<int, std::string> by_id;
    std::map<std::string, int, std::less<>> by_name;
  };
  const Table& table(Race race) const;
  std::map<Race, Table> tables_;
};

std::filesystem::path default_data_dir();

}  // namespace sc2lora
