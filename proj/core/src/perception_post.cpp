#include "refiner/perception_post.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "refiner/errors.hpp"

namespace refiner {

void validate(const PerceptionPostConfig& cfg) {
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) {
    throw InvalidArgument(fmt::format("tau must lie in (0,1), got {}", cfg.tau));
  }
  if (cfg.min_component_area < 1) {
    throw InvalidArgument(fmt::format("min_component_area must be >= 1, got {}", cfg.min_component_area));
  }
}

BinaryMask threshold_map(const SaliencyMap& map, const PerceptionPostConfig& cfg) {
  validate(cfg);
  std::vector<std::uint8_t> bits(map.size());
  const auto values = map.values();
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = values[i] >= cfg.tau ? 1 : 0;
  return BinaryMask(map.width(), map.height(), std::move(bits));
}

std::vector<BoundingBox> extract_boxes(const BinaryMask& mask, const PerceptionPostConfig& cfg) {
  validate(cfg);
  const int w = mask.width();
  const int h = mask.height();
  const auto bits = mask.bits();
  std::vector<std::uint8_t> seen(bits.size(), 0);
  std::vector<int> stack;
  std::vector<BoundingBox> boxes;

  static constexpr int kDx[] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int kDy[] = {0, 0, 1, -1, 1, -1, 1, -1};
  const int neighbours = cfg.connectivity == PerceptionPostConfig::Connectivity::eight ? 8 : 4;

  for (int start = 0; start < w * h; ++start) {
    if (!bits[start] || seen[start]) continue;
    BoundingBox box{start % w, start / w, start % w, start / w};
    int area = 0;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int x = p % w;
      const int y = p / w;
      ++area;
      box.x_min = std::min(box.x_min, x);
      box.x_max = std::max(box.x_max, x);
      box.y_min = std::min(box.y_min, y);
      box.y_max = std::max(box.y_max, y);
      for (int k = 0; k < neighbours; ++k) {
        const int nx = x + kDx[k];
        const int ny = y + kDy[k];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const int q = ny * w + nx;
        if (bits[q] && !seen[q]) {
          seen[q] = 1;
          stack.push_back(q);
        }
      }
    }
    if (area >= cfg.min_component_area) boxes.push_back(box);
  }

  std::sort(boxes.begin(), boxes.end(), [](const BoundingBox& a, const BoundingBox& b) {
    if (a.y_min != b.y_min) return a.y_min < b.y_min;
    if (a.x_min != b.x_min) return a.x_min < b.x_min;
    return a < b;
  });
  return boxes;
}

BinaryMask union_masks(std::span<const BinaryMask> masks) {
  if (masks.empty()) throw InvalidArgument("union_masks: no masks given");
  const int w = masks.front().width();
  const int h = masks.front().height();
  std::vector<std::uint8_t> out(masks.front().bits().begin(), masks.front().bits().end());
  for (const auto& m : masks.subspan(1)) {
    if (m.width() != w || m.height() != h) {
      throw InvalidArgument(
          fmt::format("union_masks: dimension mismatch {}x{} vs {}x{}", w, h, m.width(), m.height()));
    }
    const auto bits = m.bits();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] |= bits[i];
  }
  return BinaryMask(w, h, std::move(out));
}

}  // namespace refiner
