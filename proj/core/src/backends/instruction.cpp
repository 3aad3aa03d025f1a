#include "refiner/backends/instruction.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace refiner::backends {

std::string location_phrase(const BoundingBox& box, int image_width, int image_height) {
  static constexpr const char* kRows[] = {"top", "middle", "bottom"};
  static constexpr const char* kCols[] = {"left", "center", "right"};
  const double cx = (box.x_min + box.x_max + 1) / 2.0;
  const double cy = (box.y_min + box.y_max + 1) / 2.0;
  const int col = std::clamp(static_cast<int>(3.0 * cx / image_width), 0, 2);
  const int row = std::clamp(static_cast<int>(3.0 * cy / image_height), 0, 2);
  if (row == 1 && col == 1) return "center";
  return fmt::format("{}-{}", kRows[row], kCols[col]);
}

std::string build_re_edit_instruction(std::span<const FlawDiagnosis> diagnoses, int image_width, int image_height,
                                      const ReEditTemplate& tmpl) {
  std::string out;
  for (RegionKind kind : kRegionKinds) {
    const std::string& verb = kind == RegionKind::artifact ? tmpl.artifact_verb : tmpl.failure_verb;
    for (const auto& d : diagnoses) {
      if (d.region_kind != kind) continue;
      if (!out.empty()) out += tmpl.separator;
      out += fmt::format("{} the {} in the {} region (x {}-{}, y {}-{})", verb, d.flaw_type,
                         location_phrase(d.box, image_width, image_height), d.box.x_min, d.box.x_max, d.box.y_min,
                         d.box.y_max);
    }
  }
  return out;
}

}  // namespace refiner::backends
