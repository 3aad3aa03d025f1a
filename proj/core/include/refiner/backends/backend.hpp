#pragma once

#include <memory>

#include "refiner/backends/protocol.hpp"

namespace refiner::backends {

class PerceptionBackend {
 public:
  virtual ~PerceptionBackend() = default;
  virtual PerceptionResponse perceive(const PerceptionRequest& request) = 0;
};

class ReasoningBackend {
 public:
  virtual ~ReasoningBackend() = default;
  virtual ReasoningResponse reason(const ReasoningRequest& request) = 0;
};

class ActionBackend {
 public:
  virtual ~ActionBackend() = default;
  virtual ActionResponse act(const ActionRequest& request) = 0;
};

class EvaluationBackend {
 public:
  virtual ~EvaluationBackend() = default;
  virtual EvaluationResponse evaluate(const EvaluationRequest& request) = 0;
};

/// The four agents one session talks to.
struct BackendSet {
  std::shared_ptr<PerceptionBackend> perception;
  std::shared_ptr<ReasoningBackend> reasoning;
  std::shared_ptr<ActionBackend> action;
  std::shared_ptr<EvaluationBackend> evaluation;

  bool complete() const { return perception && reasoning && action && evaluation; }
};

// Response invariants. Each throws InvariantViolation naming the broken invariant.

/// Both maps match the edited image's dimensions.
void check_response(const PerceptionRequest& request, const PerceptionResponse& response);
/// Every diagnosis has a flaw type, the requested region kind, and one of the requested boxes.
void check_response(const ReasoningRequest& request, const ReasoningResponse& response);
/// The re-edited image has the previous edit's dimensions and a non-empty id.
void check_response(const ActionRequest& request, const ActionResponse& response);
/// All three scores lie in (0, 100].
void check_response(const EvaluationRequest& request, const EvaluationResponse& response);

// Checked calls: invoke the backend, then enforce the response invariants.

PerceptionResponse call_backend(PerceptionBackend& backend, const PerceptionRequest& request);
ReasoningResponse call_backend(ReasoningBackend& backend, const ReasoningRequest& request);
ActionResponse call_backend(ActionBackend& backend, const ActionRequest& request);
EvaluationResponse call_backend(EvaluationBackend& backend, const EvaluationRequest& request);

}  // namespace refiner::backends
