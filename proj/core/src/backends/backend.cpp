#include "refiner/backends/backend.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "refiner/errors.hpp"

namespace refiner::backends {

namespace {

void check_map(const SaliencyMap& map, const ImageRef& edited, const char* name) {
  if (map.width() != edited.width || map.height() != edited.height) {
    throw InvariantViolation(fmt::format("{} is {}x{}, edited image is {}x{}", name, map.width(), map.height(),
                                         edited.width, edited.height));
  }
  for (double v : map.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvariantViolation("saliency value out of [0,1]");
  }
}

}  // namespace

void check_response(const PerceptionRequest& request, const PerceptionResponse& response) {
  check_map(response.artifact_map, request.edited, "artifact_map");
  check_map(response.failure_map, request.edited, "failure_map");
}

void check_response(const ReasoningRequest& request, const ReasoningResponse& response) {
  for (const auto& d : response.diagnoses) {
    if (d.flaw_type.empty()) throw InvariantViolation("diagnosis has an empty flaw_type");
    if (d.region_kind != request.region_kind) {
      throw InvariantViolation(fmt::format("diagnosis region_kind {} differs from requested {}",
                                           to_string(d.region_kind), to_string(request.region_kind)));
    }
    if (std::find(request.boxes.begin(), request.boxes.end(), d.box) == request.boxes.end()) {
      throw InvariantViolation(fmt::format("diagnosis references box ({},{},{},{}) that was not provided", d.box.x_min,
                                           d.box.y_min, d.box.x_max, d.box.y_max));
    }
  }
}

void check_response(const ActionRequest& request, const ActionResponse& response) {
  const auto& out = response.re_edited;
  if (out.id.empty()) throw InvariantViolation("re-edited image has an empty id");
  if (out.width != request.previous_edit.width || out.height != request.previous_edit.height) {
    throw InvariantViolation(fmt::format("re-edited image is {}x{}, input was {}x{}", out.width, out.height,
                                         request.previous_edit.width, request.previous_edit.height));
  }
}

void check_response(const EvaluationRequest&, const EvaluationResponse& response) {
  for (Dimension d : kDimensions) {
    const double v = response.scores.get(d);
    if (!(v > 0.0 && v <= 100.0)) {
      throw InvariantViolation(fmt::format("score {} = {} outside (0,100]", to_string(d), v));
    }
  }
}

PerceptionResponse call_backend(PerceptionBackend& backend, const PerceptionRequest& request) {
  auto response = backend.perceive(request);
  check_response(request, response);
  return response;
}

ReasoningResponse call_backend(ReasoningBackend& backend, const ReasoningRequest& request) {
  auto response = backend.reason(request);
  check_response(request, response);
  return response;
}

ActionResponse call_backend(ActionBackend& backend, const ActionRequest& request) {
  auto response = backend.act(request);
  check_response(request, response);
  return response;
}

EvaluationResponse call_backend(EvaluationBackend& backend, const EvaluationRequest& request) {
  auto response = backend.evaluate(request);
  check_response(request, response);
  return response;
}

}  // namespace refiner::backends
