#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "refiner/types.hpp"

namespace refiner::backends {

inline constexpr std::string_view kProtocolHeader = "x-editrefiner-proto";
inline constexpr std::string_view kProtocolVersion = "1";
inline constexpr std::string_view kRequestIdHeader = "x-request-id";

enum class AgentKind { perception, reasoning, action, evaluation };

std::string_view to_string(AgentKind kind);
/// "/perceive", "/reason", "/act", "/evaluate".
std::string_view endpoint_path(AgentKind kind);

struct PerceptionRequest {
  ImageRef source;
  ImageRef edited;
  std::string instruction;
};

struct PerceptionResponse {
  SaliencyMap artifact_map;
  SaliencyMap failure_map;
};

/// One region kind's boxes go to the reasoning agent per call.
struct ReasoningRequest {
  ImageRef source;
  ImageRef edited;
  std::string instruction;
  RegionKind region_kind = RegionKind::artifact;
  std::vector<BoundingBox> boxes;
};

struct ReasoningResponse {
  std::vector<FlawDiagnosis> diagnoses;
  std::string summary;
};

struct ActionRequest {
  ImageRef source;
  ImageRef previous_edit;
  std::string re_edit_instruction;
  BinaryMask mask;
};

struct ActionResponse {
  ImageRef re_edited;
};

struct EvaluationRequest {
  ImageRef source;
  ImageRef edited;
  std::string instruction;
};

struct EvaluationResponse {
  DimensionScores scores;
};

/// Error body returned by a server on any non-200 status.
struct ErrorBody {
  std::string code;
  std::string message;
};

// Wire encoding. Images travel as base64 PNG (RGB8), saliency maps as base64 16-bit
// single-channel PNG, masks as base64 1-bit PNG. Decoders also accept a saliency map given
// as a plain "values" array. Decoding throws ProtocolError on a malformed message and
// InvariantViolation when a decoded map holds a value outside [0,1].

/// Malformed JSON is a ProtocolError.
nlohmann::json parse_wire_json(std::string_view text);

nlohmann::json to_wire(const ImageRef& image);
nlohmann::json to_wire(const SaliencyMap& map);
nlohmann::json to_wire(const BinaryMask& mask);
nlohmann::json to_wire(const PerceptionRequest& m);
nlohmann::json to_wire(const PerceptionResponse& m);
nlohmann::json to_wire(const ReasoningRequest& m);
nlohmann::json to_wire(const ReasoningResponse& m);
nlohmann::json to_wire(const ActionRequest& m);
nlohmann::json to_wire(const ActionResponse& m);
nlohmann::json to_wire(const EvaluationRequest& m);
nlohmann::json to_wire(const EvaluationResponse& m);
nlohmann::json to_wire(const ErrorBody& m);

void from_wire(const nlohmann::json& j, ImageRef& out);
void from_wire(const nlohmann::json& j, SaliencyMap& out);
void from_wire(const nlohmann::json& j, BinaryMask& out);
void from_wire(const nlohmann::json& j, PerceptionRequest& out);
void from_wire(const nlohmann::json& j, PerceptionResponse& out);
void from_wire(const nlohmann::json& j, ReasoningRequest& out);
void from_wire(const nlohmann::json& j, ReasoningResponse& out);
void from_wire(const nlohmann::json& j, ActionRequest& out);
void from_wire(const nlohmann::json& j, ActionResponse& out);
void from_wire(const nlohmann::json& j, EvaluationRequest& out);
void from_wire(const nlohmann::json& j, EvaluationResponse& out);
void from_wire(const nlohmann::json& j, ErrorBody& out);

template <typename T>
T decode(const nlohmann::json& j) {
  T out;
  from_wire(j, out);
  return out;
}

/// Parses message text and decodes it.
template <typename T>
T decode_text(std::string_view text) {
  return decode<T>(parse_wire_json(text));
}

}  // namespace refiner::backends
