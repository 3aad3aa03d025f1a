#pragma once

#include <chrono>
#include <functional>
#include <string>

#include "refiner/backends/backend.hpp"

namespace refiner::backends {

/// Base URL per agent, e.g. "http://127.0.0.1:8080". The endpoint path is appended.
struct Endpoints {
  std::string perception;
  std::string reasoning;
  std::string action;
  std::string evaluation;

  /// Same server for all four agents.
  static Endpoints single(const std::string& base_url);
  const std::string& for_kind(AgentKind kind) const;
};

struct AttemptEvent {
  AgentKind kind = AgentKind::perception;
  std::string request_id;
  int attempt = 0;  // 1-based
  std::string outcome;  // "ok", or the failure that triggered a retry / abort
};

struct ClientOptions {
  std::chrono::milliseconds perception_timeout{30'000};
  std::chrono::milliseconds reasoning_timeout{30'000};
  std::chrono::milliseconds action_timeout{300'000};
  std::chrono::milliseconds evaluation_timeout{30'000};
  std::chrono::milliseconds connect_timeout{5'000};
  /// Total attempts per call, including the first. Only transport failures are retried.
  int max_attempts = 3;
  std::chrono::milliseconds retry_backoff{100};
  /// Called after every attempt; may be invoked from several threads.
  std::function<void(const AttemptEvent&)> on_attempt;

  std::chrono::milliseconds timeout_for(AgentKind kind) const;
};

/// Speaks the JSON-over-HTTP protocol to a model server.
///
/// Each call gets a fresh UUID request id carried in the x-request-id header and reused on
/// every retry. Transport failures and 502/503/504 are retried up to max_attempts; any other
/// non-200 status is a ProtocolError built from the server's {code, message} body. Responses
/// must carry the protocol version header and are invariant-checked before being returned.
/// Safe to share across threads.
class HttpBackendClient final : public PerceptionBackend,
                                public ReasoningBackend,
                                public ActionBackend,
                                public EvaluationBackend {
 public:
  explicit HttpBackendClient(Endpoints endpoints, ClientOptions options = {});

  PerceptionResponse perceive(const PerceptionRequest& request) override;
  ReasoningResponse reason(const ReasoningRequest& request) override;
  ActionResponse act(const ActionRequest& request) override;
  EvaluationResponse evaluate(const EvaluationRequest& request) override;

 private:
  nlohmann::json post(AgentKind kind, const nlohmann::json& body);

  Endpoints endpoints_;
  ClientOptions options_;
};

/// A BackendSet whose four members share one client.
BackendSet make_http_backends(Endpoints endpoints, ClientOptions options = {});

}  // namespace refiner::backends
