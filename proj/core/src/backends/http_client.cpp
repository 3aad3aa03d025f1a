#include "refiner/backends/http_client.hpp"

#include <thread>

#include <boost/uuid/uuid.hpp>
#include <boost/uuid/uuid_generators.hpp>
#include <boost/uuid/uuid_io.hpp>
#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "refiner/errors.hpp"

namespace refiner::backends {

Endpoints Endpoints::single(const std::string& base_url) { return {base_url, base_url, base_url, base_url}; }

const std::string& Endpoints::for_kind(AgentKind kind) const {
  switch (kind) {
    case AgentKind::perception:
      return perception;
    case AgentKind::reasoning:
      return reasoning;
    case AgentKind::action:
      return action;
    case AgentKind::evaluation:
      return evaluation;
  }
  return perception;
}

std::chrono::milliseconds ClientOptions::timeout_for(AgentKind kind) const {
  switch (kind) {
    case AgentKind::perception:
      return perception_timeout;
    case AgentKind::reasoning:
      return reasoning_timeout;
    case AgentKind::action:
      return action_timeout;
    case AgentKind::evaluation:
      return evaluation_timeout;
  }
  return perception_timeout;
}

HttpBackendClient::HttpBackendClient(Endpoints endpoints, ClientOptions options)
    : endpoints_(std::move(endpoints)), options_(std::move(options)) {
  if (options_.max_attempts < 1) throw InvalidArgument("max_attempts must be >= 1");
}

namespace {

std::string new_request_id() {
  thread_local boost::uuids::random_generator gen;
  return boost::uuids::to_string(gen());
}

bool retryable_status(int status) { return status == 502 || status == 503 || status == 504; }

}  // namespace

nlohmann::json HttpBackendClient::post(AgentKind kind, const nlohmann::json& body) {
  const std::string request_id = new_request_id();
  const std::string payload = body.dump();
  const std::string& base = endpoints_.for_kind(kind);
  const auto path = std::string(endpoint_path(kind));
  const auto timeout = options_.timeout_for(kind);

  auto report = [&](int attempt, std::string outcome) {
    spdlog::debug("{} {} attempt {} [{}]: {}", to_string(kind), request_id, attempt, base + path, outcome);
    if (options_.on_attempt) options_.on_attempt({kind, request_id, attempt, std::move(outcome)});
  };

  std::string last_failure;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(options_.retry_backoff);

    httplib::Client client(base);
    client.set_connection_timeout(options_.connect_timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    const httplib::Headers headers = {{std::string(kProtocolHeader), std::string(kProtocolVersion)},
                                      {std::string(kRequestIdHeader), request_id}};
    auto res = client.Post(path, headers, payload, "application/json");

    if (!res) {
      last_failure = fmt::format("transport: {}", httplib::to_string(res.error()));
      report(attempt, last_failure);
      continue;
    }
    if (retryable_status(res->status)) {
      last_failure = fmt::format("transport: HTTP {}", res->status);
      report(attempt, last_failure);
      continue;
    }
    if (res->status != 200) {
      report(attempt, fmt::format("protocol: HTTP {}", res->status));
      const auto j = nlohmann::json::parse(res->body, nullptr, false);
      if (!j.is_discarded() && j.is_object() && j.contains("code") && j.contains("message")) {
        const auto err = decode<ErrorBody>(j);
        throw ProtocolError(err.code, err.message);
      }
      throw ProtocolError("http_" + std::to_string(res->status), "server returned no error body");
    }
    const auto version = res->get_header_value(std::string(kProtocolHeader));
    if (version != kProtocolVersion) {
      report(attempt, "protocol: version header mismatch");
      throw ProtocolError("version", fmt::format("expected {} {}, got '{}'", kProtocolHeader, kProtocolVersion, version));
    }
    report(attempt, "ok");
    return parse_wire_json(res->body);
  }
  throw TransportError(fmt::format("{} call {} failed after {} attempt(s): {}", to_string(kind), request_id,
                                   options_.max_attempts, last_failure));
}

PerceptionResponse HttpBackendClient::perceive(const PerceptionRequest& request) {
  auto response = decode<PerceptionResponse>(post(AgentKind::perception, to_wire(request)));
  check_response(request, response);
  return response;
}

ReasoningResponse HttpBackendClient::reason(const ReasoningRequest& request) {
  auto response = decode<ReasoningResponse>(post(AgentKind::reasoning, to_wire(request)));
  check_response(request, response);
  return response;
}

ActionResponse HttpBackendClient::act(const ActionRequest& request) {
  auto response = decode<ActionResponse>(post(AgentKind::action, to_wire(request)));
  check_response(request, response);
  return response;
}

EvaluationResponse HttpBackendClient::evaluate(const EvaluationRequest& request) {
  auto response = decode<EvaluationResponse>(post(AgentKind::evaluation, to_wire(request)));
  check_response(request, response);
  return response;
}

BackendSet make_http_backends(Endpoints endpoints, ClientOptions options) {
  auto client = std::make_shared<HttpBackendClient>(std::move(endpoints), std::move(options));
  return {client, client, client, client};
}

}  // namespace refiner::backends
