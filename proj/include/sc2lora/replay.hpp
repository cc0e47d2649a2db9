// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sc2lora {

enum class Race { Terran, Protoss, Zerg };

inline constexpr std::array<Race, 3> kAllRaces = {Race::Terran, Race::Protoss, Race::Zerg};

std::string_view race_name(Race race);
char race_letter(Race race);
Race race_from_name(std::string_view name);  // "Terran" / "terran" / "T"

struct MatchUp {
  Race player = Race::Terran;
  Race opponent = Race::Terran;

  std::string str() const;  // "TvZ"
  static MatchUp parse(std::string_view text);
  bool operator==(const MatchUp&) const = default;
};

// Global features in [0,1]; the field set mirrors the stage-2 prompt rows.
struct GlobalFeatures {
  double progress = 0.0;
  double army_count = 0.0;
  double minerals_collected = 0.0;
  double minerals_used = 0.0;
  double vespene_collected = 0.0;
  double vespene_used = 0.0;
  double food_used = 0.0;
  double food_cap = 0.0;
  double food_army = 0.0;
  double food_workers = 0.0;
  double idle_workers = 0.0;
  double warp_gates = 0.0;
  double larva = 0.0;

  static constexpr std::size_t kFieldCount = 13;
  // JSON keys in serialization order, paired with the member they address.
  static const std::array<std::string_view, kFieldCount>& field_names();
  double& field(std::size_t i);
  double field(std::size_t i) const;

  bool operator==(const GlobalFeatures&) const = default;
};

class SpatialFeatures {
 public:
  static constexpr int kPlanes = 13;
  static constexpr int kSide = 64;
  static constexpr int kPlaneSize = kSide * kSide;

  SpatialFeatures() : values_(static_cast<std::size_t>(kPlanes) * kPlaneSize, 0.0f) {}

  float& at(int plane, int row, int col) { return values_[index(plane, row, col)]; }
  float at(int plane, int row, int col) const { return values_[index(plane, row, col)]; }

  // Row-major 64x64 view of one plane.
  const float* plane(int p) const { return values_.data() + static_cast<std::size_t>(p) * kPlaneSize; }
  float* plane(int p) { return values_.data() + static_cast<std::size_t>(p) * kPlaneSize; }

  const std::vector<float>& values() const { return values_; }
  bool operator==(const SpatialFeatures&) const = default;

 private:
  static std::size_t index(int plane, int row, int col) {
    return (static_cast<std::size_t>(plane) * kSide + row) * kSide + col;
  }
  std::vector<float> values_;
};

struct ReplayStep {
  GlobalFeatures global;
  SpatialFeatures spatial;
  std::vector<int> next_actions;
  bool operator==(const ReplayStep&) const = default;
};

struct Replay {
  MatchUp matchup;
  std::vector<ReplayStep> steps;
  int outcome = 0;
  std::int64_t frame_count = 0;
  int player_apm = 0;
  int opponent_apm = 0;
  int player_mmr = 0;
  int opponent_mmr = 0;
  bool operator==(const Replay&) const = default;
};

class ActionCatalog;

// Throws InvariantViolation. With a catalog, also checks that every action id
// belongs to the player race.
void check_invariants(const Replay& replay, const ActionCatalog* catalog = nullptr);

Replay load_replay(const std::filesystem::path& path);
void write_replay(const Replay& replay, const std::filesystem::path& path);
std::string serialize_replay(const Replay& replay);
Replay parse_replay(std::string_view text, const std::string& source = "<memory>");

// Replay sets are stored one replay per file, named replay_0000.jsonl, ...
std::vector<Replay> load_replay_dir(const std::filesystem::path& dir);
void write_replay_dir(const std::vector<Replay>& replays, const std::filesystem::path& dir);

struct ValidationCriteria {
  std::int64_t min_frames = 10000;
  int min_apm = 10;
  int min_mmr = 1000;
};

struct ValidationResult {
  bool passed = true;
  std::vector<std::string> reasons;  // "min_frames", "min_apm", "min_mmr"
};

ValidationResult validate_replay(const Replay& replay, const ValidationCriteria& criteria = {});

struct SynthesisOptions {
  int steps_per_replay = 3;
  int horizon = 4;
  int building_plane = 0;
};

// Deterministic in (matchup, n, seed, options). Actions are drawn from the
// catalog of the player race.
std::vector<Replay> synthesize_replays(const MatchUp& matchup, int n, std::uint64_t seed,
                                       const ActionCatalog& catalog, const SynthesisOptions& options = {});

// Uniform sample without replacement, deterministic in seed.
std::vector<Replay> subset_replays(const std::vector<Replay>& replays, std::size_t n, std::uint64_t seed);

}  // namespace sc2lora
