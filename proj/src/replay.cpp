// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/replay.hpp"

#include "sc2lora/catalog.hpp"
#include "sc2lora/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace sc2lora {

using nlohmann::json;

std::string_view race_name(Race race) {
  switch (race) {
    case Race::Terran: return "Terran";
    case Race::Protoss: return "Protoss";
    case Race::Zerg: return "Zerg";
  }
  return "?";
}

char race_letter(Race race) { return race_name(race)[0]; }

Race race_from_name(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "terran" || lower == "t") return Race::Terran;
  if (lower == "protoss" || lower == "p") return Race::Protoss;
  if (lower == "zerg" || lower == "z") return Race::Zerg;
  throw Error(ErrorKind::InvariantViolation, "unknown race '" + std::string(name) + "'");
}

std::string MatchUp::str() const { return {race_letter(player), 'v', race_letter(opponent)}; }

MatchUp MatchUp::parse(std::string_view text) {
  if (text.size() != 3 || (text[1] != 'v' && text[1] != 'V')) {
    throw Error(ErrorKind::InvariantViolation, "match-up must look like 'TvZ', got '" + std::string(text) + "'");
  }
  return MatchUp{race_from_name(text.substr(0, 1)), race_from_name(text.substr(2, 1))};
}

const std::array<std::string_view, GlobalFeatures::kFieldCount>& GlobalFeatures::field_names() {
  static const std::array<std::string_view, kFieldCount> names = {
      "progress",     "army_count", "minerals_collected", "minerals_used", "vespene_collected",
      "vespene_used", "food_used",  "food_cap",           "food_army",     "food_workers",
      "idle_workers", "warp_gates", "larva"};
  return names;
}

double& GlobalFeatures::field(std::size_t i) {
  double* fields[kFieldCount] = {&progress,     &army_count, &minerals_collected, &minerals_used, &vespene_collected,
                                 &vespene_used, &food_used,  &food_cap,           &food_army,     &food_workers,
                                 &idle_workers, &warp_gates, &larva};
  if (i >= kFieldCount) throw Error(ErrorKind::OutOfRange, "global feature index " + std::to_string(i));
  return *fields[i];
}

double GlobalFeatures::field(std::size_t i) const { return const_cast<GlobalFeatures*>(this)->field(i); }

void check_invariants(const Replay& replay, const ActionCatalog* catalog) {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvariantViolation, what); };
  if (replay.outcome != 0 && replay.outcome != 1) fail("outcome must be 0 or 1, got " + std::to_string(replay.outcome));
  if (replay.steps.empty()) fail("replay has no steps");
  double last_progress = -1.0;
  for (std::size_t s = 0; s < replay.steps.size(); ++s) {
    const ReplayStep& step = replay.steps[s];
    for (std::size_t f = 0; f < GlobalFeatures::kFieldCount; ++f) {
      const double v = step.global.field(f);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        fail("step " + std::to_string(s) + ": global feature '" + std::string(GlobalFeatures::field_names()[f]) +
             "' outside [0,1]");
      }
    }
    if (step.global.progress < last_progress) fail("step " + std::to_string(s) + ": progress decreases");
    last_progress = step.global.progress;
    if (step.spatial.values().size() != static_cast<std::size_t>(SpatialFeatures::kPlanes) * SpatialFeatures::kPlaneSize) {
      fail("step " + std::to_string(s) + ": spatial block has wrong size");
    }
    for (float v : step.spatial.values()) {
      if (!std::isfinite(v)) fail("step " + std::to_string(s) + ": non-finite spatial value");
    }
    if (catalog != nullptr) {
      for (int id : step.next_actions) {
        if (!catalog->contains(replay.matchup.player, id)) {
          fail("step " + std::to_string(s) + ": action " + std::to_string(id) + " not in the " +
               std::string(race_name(replay.matchup.player)) + " catalog");
        }
      }
    }
  }
}

namespace {

void append_float(std::string& out, float v) {
  if (v == std::trunc(v) && std::fabs(v) < 1e9f) {
    out += std::to_string(static_cast<long long>(v));
    return;
  }
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, end);
}

std::string header_json(const Replay& r) {
  json h;
  h["matchup"] = r.matchup.str();
  h["outcome"] = r.outcome;
  h["frame_count"] = r.frame_count;
  h["player_apm"] = r.player_apm;
  h["opponent_apm"] = r.opponent_apm;
  h["player_mmr"] = r.player_mmr;
  h["opponent_mmr"] = r.opponent_mmr;
  return h.dump();
}

// Field order is fixed, so the spatial block is streamed by hand; the rest
// goes through nlohmann to keep number formatting round-trip exact.
std::string step_json(const ReplayStep& step) {
  json global = json::object();
  for (std::size_t f = 0; f < GlobalFeatures::kFieldCount; ++f) {
    global[std::string(GlobalFeatures::field_names()[f])] = step.global.field(f);
  }
  std::string out = "{\"progress\":" + json(step.global.progress).dump() + ",\"global\":" + global.dump() +
                    ",\"spatial\":[";
  out.reserve(out.size() + SpatialFeatures::kPlanes * SpatialFeatures::kPlaneSize * 2 + 1024);
  for (int p = 0; p < SpatialFeatures::kPlanes; ++p) {
    if (p) out += ',';
    out += '[';
    for (int r = 0; r < SpatialFeatures::kSide; ++r) {
      if (r) out += ',';
      out += '[';
      for (int c = 0; c < SpatialFeatures::kSide; ++c) {
        if (c) out += ',';
        append_float(out, step.spatial.at(p, r, c));
      }
      out += ']';
    }
    out += ']';
  }
  out += "],\"next_actions\":" + json(step.next_actions).dump() + "}";
  return out;
}

template <typename V>
V get_field(const json& obj, const char* key, const std::string& source, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw MalformedFile(source, line, std::string("missing field '") + key + "'");
  try {
    return it->get<V>();
  } catch (const json::exception& e) {
    throw MalformedFile(source, line, std::string("field '") + key + "': " + e.what());
  }
}

void require_number(const json& v, const std::string& what, const std::string& source, std::size_t line) {
  if (!v.is_number()) throw MalformedFile(source, line, what + " must be a number");
}

ReplayStep parse_step(const json& obj, const std::string& source, std::size_t line) {
  if (!obj.is_object()) throw MalformedFile(source, line, "step must be a JSON object");
  ReplayStep step;
  const auto global_it = obj.find("global");
  if (global_it == obj.end() || !global_it->is_object()) throw MalformedFile(source, line, "missing object 'global'");
  for (std::size_t f = 0; f < GlobalFeatures::kFieldCount; ++f) {
    const std::string key(GlobalFeatures::field_names()[f]);
    auto it = global_it->find(key);
    if (it == global_it->end()) {
      // Progress may live only at the top level.
      if (f == 0) continue;
      throw MalformedFile(source, line, "global is missing '" + key + "'");
    }
    require_number(*it, "global." + key, source, line);
    step.global.field(f) = it->get<double>();
  }
  const auto progress_it = obj.find("progress");
  if (progress_it == obj.end()) throw MalformedFile(source, line, "missing field 'progress'");
  require_number(*progress_it, "progress", source, line);
  const double progress = progress_it->get<double>();
  if (global_it->contains("progress") && step.global.progress != progress) {
    throw Error(ErrorKind::InvariantViolation, source + ":" + std::to_string(line) + ": progress disagrees with global.progress");
  }
  step.global.progress = progress;

  const auto spatial_it = obj.find("spatial");
  if (spatial_it == obj.end() || !spatial_it->is_array()) throw MalformedFile(source, line, "missing array 'spatial'");
  const json& planes = *spatial_it;
  auto shape_error = [&](const std::string& what) {
    throw Error(ErrorKind::InvariantViolation, source + ":" + std::to_string(line) + ": spatial " + what);
  };
  if (planes.size() != SpatialFeatures::kPlanes) {
    shape_error("block has " + std::to_string(planes.size()) + " planes, expected 13");
  }
  for (int p = 0; p < SpatialFeatures::kPlanes; ++p) {
    const json& rows = planes[p];
    if (!rows.is_array()) throw MalformedFile(source, line, "spatial plane must be an array");
    if (rows.size() != SpatialFeatures::kSide) shape_error("plane " + std::to_string(p) + " has wrong row count");
    for (int r = 0; r < SpatialFeatures::kSide; ++r) {
      const json& cols = rows[r];
      if (!cols.is_array()) throw MalformedFile(source, line, "spatial row must be an array");
      if (cols.size() != SpatialFeatures::kSide) shape_error("plane " + std::to_string(p) + " has wrong column count");
      for (int c = 0; c < SpatialFeatures::kSide; ++c) {
        const json& v = cols[c];
        require_number(v, "spatial value", source, line);
        step.spatial.at(p, r, c) = v.get<float>();
      }
    }
  }
  step.next_actions = get_field<std::vector<int>>(obj, "next_actions", source, line);
  return step;
}

}  // namespace

std::string serialize_replay(const Replay& replay) {
  std::string out = header_json(replay);
  out += '\n';
  for (const ReplayStep& step : replay.steps) {
    out += step_json(step);
    out += '\n';
  }
  return out;
}

Replay parse_replay(std::string_view text, const std::string& source) {
  Replay replay;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw MalformedFile(source, line_no, e.what());
    }
    if (!have_header) {
      if (!obj.is_object()) throw MalformedFile(source, line_no, "header must be a JSON object");
      try {
        replay.matchup = MatchUp::parse(get_field<std::string>(obj, "matchup", source, line_no));
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::MalformedFile) throw;
        throw MalformedFile(source, line_no, e.what());
      }
      replay.outcome = get_field<int>(obj, "outcome", source, line_no);
      replay.frame_count = get_field<std::int64_t>(obj, "frame_count", source, line_no);
      replay.player_apm = get_field<int>(obj, "player_apm", source, line_no);
      replay.opponent_apm = get_field<int>(obj, "opponent_apm", source, line_no);
      replay.player_mmr = get_field<int>(obj, "player_mmr", source, line_no);
      replay.opponent_mmr = get_field<int>(obj, "opponent_mmr", source, line_no);
      have_header = true;
      continue;
    }
    replay.steps.push_back(parse_step(obj, source, line_no));
  }
  if (!have_header) throw MalformedFile(source, line_no, "missing header line");
  check_invariants(replay);
  return replay;
}

Replay load_replay(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_replay(buf.str(), path.string());
}

void write_replay(const Replay& replay, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << serialize_replay(replay);
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::vector<Replay> load_replay_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::Io, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Replay> replays;
  replays.reserve(files.size());
  for (const auto& f : files) replays.push_back(load_replay(f));
  return replays;
}

void write_replay_dir(const std::vector<Replay>& replays, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < replays.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "replay_%04zu.jsonl", i);
    write_replay(replays[i], dir / name);
  }
}

ValidationResult validate_replay(const Replay& replay, const ValidationCriteria& criteria) {
  ValidationResult result;
  if (replay.frame_count < criteria.min_frames) result.reasons.emplace_back("min_frames");
  if (replay.player_apm < criteria.min_apm || replay.opponent_apm < criteria.min_apm) {
    result.reasons.emplace_back("min_apm");
  }
  if (replay.player_mmr < criteria.min_mmr || replay.opponent_mmr < criteria.min_mmr) {
    result.reasons.emplace_back("min_mmr");
  }
  result.passed = result.reasons.empty();
  return result;
}

namespace {

// Piecewise-linear trajectory through (0, start), (knot, mid), (1, end).
struct Trajectory {
  double start, knot, mid, end;
  double at(double p) const {
    const double v = p <= knot ? start + (mid - start) * (p / knot) : mid + (end - mid) * ((p - knot) / (1.0 - knot));
    return std::clamp(v, 0.0, 1.0);
  }
};

constexpr int kLattice = 16;  // buildings sit on a 16x16 lattice of 4x4 cells
constexpr int kCell = SpatialFeatures::kSide / kLattice;
constexpr int kMaxBuildings = kLattice * kLattice;

std::uint64_t matchup_salt(const MatchUp& m) {
  return 0x9E3779B97F4A7C15ULL * (1 + static_cast<std::uint64_t>(m.player) * 3 + static_cast<std::uint64_t>(m.opponent));
}

}  // namespace

std::vector<Replay> synthesize_replays(const MatchUp& matchup, int n, std::uint64_t seed, const ActionCatalog& catalog,
                                       const SynthesisOptions& options) {
  require(n >= 1, ErrorKind::PreconditionViolation, "synthesize_replays needs n >= 1");
  require(options.steps_per_replay >= 1 && options.horizon >= 1, ErrorKind::PreconditionViolation,
          "steps_per_replay and horizon must be >= 1");
  require(options.building_plane >= 0 && options.building_plane < SpatialFeatures::kPlanes,
          ErrorKind::PreconditionViolation, "building plane out of range");
  const std::vector<int> action_ids = catalog.ids(matchup.player);
  require(!action_ids.empty(), ErrorKind::PreconditionViolation, "empty action catalog for player race");

  std::mt19937_64 rng(seed ^ matchup_salt(matchup));
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  // Balanced outcomes.
  std::vector<int> outcomes(static_cast<std::size_t>(n), 0);
  const int wins = n / 2 + ((n % 2 == 1) ? static_cast<int>(rng() & 1U) : 0);
  std::fill(outcomes.begin(), outcomes.begin() + wins, 1);
  std::shuffle(outcomes.begin(), outcomes.end(), rng);

  // Building counts are distinct across the whole set when they fit on the
  // lattice, so every step renders a different prompt.
  const int steps = options.steps_per_replay;
  const int total_steps = n * steps;
  std::vector<int> counts(static_cast<std::size_t>(total_steps));
  if (total_steps <= kMaxBuildings) {
    const int range = std::min(kMaxBuildings, std::max(48, total_steps));
    std::vector<int> pool(static_cast<std::size_t>(range));
    std::iota(pool.begin(), pool.end(), 1);
    std::shuffle(pool.begin(), pool.end(), rng);
    std::copy(pool.begin(), pool.begin() + total_steps, counts.begin());
  } else {
    for (int& c : counts) c = uniform_int(0, kMaxBuildings);
  }

  std::vector<Replay> replays;
  replays.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Replay r;
    r.matchup = matchup;
    r.outcome = outcomes[static_cast<std::size_t>(i)];
    r.frame_count = uniform_int(10000, 40000);
    r.player_apm = uniform_int(40, 300);
    r.opponent_apm = uniform_int(40, 300);
    r.player_mmr = uniform_int(2000, 6000);
    r.opponent_mmr = uniform_int(2000, 6000);

    // Winners grow their economy faster.
    const double growth = r.outcome == 1 ? 1.25 : 0.8;
    std::array<Trajectory, GlobalFeatures::kFieldCount> traj{};
    for (std::size_t f = 1; f < GlobalFeatures::kFieldCount; ++f) {
      Trajectory t;
      t.start = uniform(0.0, 0.15);
      t.knot = uniform(0.3, 0.7);
      t.mid = t.start + growth * uniform(0.05, 0.45);
      t.end = t.mid + growth * uniform(-0.1, 0.5);
      traj[f] = t;
    }
    const std::string_view warp_field = "warp_gates";
    const std::string_view larva_field = "larva";

    std::vector<int> step_counts(counts.begin() + i * steps, counts.begin() + (i + 1) * steps);
    std::sort(step_counts.begin(), step_counts.end());

    for (int s = 0; s < steps; ++s) {
      ReplayStep step;
      const double progress = std::clamp((s + uniform(0.1, 0.9)) / steps, 0.0, 1.0);
      step.global.progress = progress;
      for (std::size_t f = 1; f < GlobalFeatures::kFieldCount; ++f) {
        const std::string_view name = GlobalFeatures::field_names()[f];
        if ((name == warp_field && matchup.player != Race::Protoss) ||
            (name == larva_field && matchup.player != Race::Zerg)) {
          step.global.field(f) = 0.0;
          continue;
        }
        step.global.field(f) = traj[f].at(progress);
      }

      // Building blobs: 2x2 squares inside distinct lattice cells never touch.
      std::vector<int> slots(kMaxBuildings);
      std::iota(slots.begin(), slots.end(), 0);
      std::shuffle(slots.begin(), slots.end(), rng);
      const int buildings = step_counts[static_cast<std::size_t>(s)];
      for (int b = 0; b < buildings; ++b) {
        const int row0 = (slots[static_cast<std::size_t>(b)] / kLattice) * kCell + 1;
        const int col0 = (slots[static_cast<std::size_t>(b)] % kLattice) * kCell + 1;
        for (int dr = 0; dr < 2; ++dr)
          for (int dc = 0; dc < 2; ++dc) step.spatial.at(options.building_plane, row0 + dr, col0 + dc) = 1.0f;
      }
      // Sparse unit markers on the remaining planes.
      for (int p = 0; p < SpatialFeatures::kPlanes; ++p) {
        if (p == options.building_plane) continue;
        const int dots = uniform_int(0, 12);
        for (int d = 0; d < dots; ++d) {
          step.spatial.at(p, uniform_int(0, SpatialFeatures::kSide - 1), uniform_int(0, SpatialFeatures::kSide - 1)) =
              1.0f;
        }
      }
      for (int a = 0; a < options.horizon; ++a) {
        step.next_actions.push_back(action_ids[static_cast<std::size_t>(
            uniform_int(0, static_cast<int>(action_ids.size()) - 1))]);
      }
      r.steps.push_back(std::move(step));
    }
    replays.push_back(std::move(r));
  }
  return replays;
}

std::vector<Replay> subset_replays(const std::vector<Replay>& replays, std::size_t n, std::uint64_t seed) {
  if (n > replays.size()) {
    throw Error(ErrorKind::InsufficientReplays,
                "requested " + std::to_string(n) + " replays, only " + std::to_string(replays.size()) + " available");
  }
  std::vector<std::size_t> order(replays.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Replay> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(replays[order[i]]);
  return out;
}

}  // namespace sc2lora
