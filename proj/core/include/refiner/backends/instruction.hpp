#pragma once

#include <span>
#include <string>

#include "refiner/types.hpp"

namespace refiner::backends {

/// Deterministic template turning diagnoses into one re-editing instruction.
///
/// Each diagnosis becomes "<verb> the <flaw type> in the <location> region (x a-b, y c-d)",
/// where the verb depends on the region kind and the location names the 3x3 grid cell holding
/// the box center ("top-left", "center", "bottom-right", ...). Clauses are joined by
/// `separator`; artifacts come before editing failures, each in input order.
struct ReEditTemplate {
  std::string artifact_verb = "Remove";
  std::string failure_verb = "Correct";
  std::string separator = "; ";
};

std::string location_phrase(const BoundingBox& box, int image_width, int image_height);

std::string build_re_edit_instruction(std::span<const FlawDiagnosis> diagnoses, int image_width, int image_height,
                                      const ReEditTemplate& tmpl = {});

}  // namespace refiner::backends
