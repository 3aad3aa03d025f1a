#pragma once

#include <span>
#include <vector>

#include "refiner/types.hpp"

namespace refiner {

struct PerceptionPostConfig {
  enum class Connectivity { four, eight };

  double tau = 0.5;
  Connectivity connectivity = Connectivity::eight;
  int min_component_area = 16;
};

/// Throws InvalidArgument unless 0 < tau < 1 and min_component_area >= 1.
void validate(const PerceptionPostConfig& cfg);

/// Bit set iff value >= tau.
BinaryMask threshold_map(const SaliencyMap& map, const PerceptionPostConfig& cfg = {});

/// Tight axis-aligned box per connected component with at least min_component_area pixels,
/// sorted by (y_min, x_min).
std::vector<BoundingBox> extract_boxes(const BinaryMask& mask, const PerceptionPostConfig& cfg = {});

/// Pointwise OR. Throws InvalidArgument on an empty list or mismatched dimensions.
BinaryMask union_masks(std::span<const BinaryMask> masks);

}  // namespace refiner
