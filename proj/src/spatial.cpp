// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "sc2lora/spatial.hpp"

#include "sc2lora/errors.hpp"

#include <cmath>
#include <vector>

namespace sc2lora {

int count_structures(std::span<const float> plane, double threshold) {
  constexpr int side = SpatialFeatures::kSide;
  require(plane.size() == static_cast<std::size_t>(SpatialFeatures::kPlaneSize), ErrorKind::ShapeMismatch,
          "plane must have 64x64 cells, got " + std::to_string(plane.size()));
  require(std::isfinite(threshold), ErrorKind::PreconditionViolation, "threshold must be finite");

  std::vector<char> seen(plane.size(), 0);
  std::vector<int> stack;
  int components = 0;
  for (int start = 0; start < SpatialFeatures::kPlaneSize; ++start) {
    if (seen[start] || !(plane[start] > threshold)) continue;
    ++components;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const int cell = stack.back();
      stack.pop_back();
      const int r = cell / side;
      const int c = cell % side;
      const int neighbours[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
      for (const auto& [nr, nc] : neighbours) {
        if (nr < 0 || nr >= side || nc < 0 || nc >= side) continue;
        const int next = nr * side + nc;
        if (!seen[next] && plane[next] > threshold) {
          seen[next] = 1;
          stack.push_back(next);
        }
      }
    }
  }
  return components;
}

std::string describe(const SpatialFeatures& spatial, const DescriberConfig& config) {
  require(config.building_plane >= 0 && config.building_plane < SpatialFeatures::kPlanes, ErrorKind::ShapeMismatch,
          "building plane index " + std::to_string(config.building_plane) + " out of range");
  const std::span<const float> plane(spatial.plane(config.building_plane), SpatialFeatures::kPlaneSize);
  const int n = count_structures(plane, config.threshold);
  if (n == 0) return "no buildings";
  return std::to_string(n) + " buildings";
}

}  // namespace sc2lora
