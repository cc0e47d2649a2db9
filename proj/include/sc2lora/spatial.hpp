// Copyright (c) 2026 The sc2lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sc2lora/replay.hpp"

#include <span>
#include <string>

namespace sc2lora {

// Stands in for the frozen vision encoder: a building counter over one plane.
struct DescriberConfig {
  int building_plane = 0;
  double threshold = 0.5;
};

// Number of 4-connected components of cells with value > threshold in a
// 64x64 row-major plane. Throws ShapeMismatch on any other size.
int count_structures(std::span<const float> plane, double threshold);

// "<n> buildings", or "no buildings" when n = 0.
std::string describe(const SpatialFeatures& spatial, const DescriberConfig& config);

}  // namespace sc2lora
