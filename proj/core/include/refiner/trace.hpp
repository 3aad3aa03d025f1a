#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "refiner/backends/mock.hpp"
#include "refiner/loop.hpp"
#include "refiner/raster_io.hpp"

namespace refiner {

/// A session trace: one JSON document plus the PNG payloads it references.
///
/// Images, saliency maps and masks appear in the document as the content hash of their raw
/// payload; `blobs` maps "<hash>.png" to the encoded file. Maps are stored as 16-bit PNG.
struct TraceDocument {
  nlohmann::json json;
  std::map<std::string, Bytes> blobs;

  /// The serialized document, exactly as written to trace.json.
  std::string text() const;
};

inline constexpr int kTraceVersion = 1;

nlohmann::json to_json(const LoopConfig& cfg);
LoopConfig loop_config_from_json(const nlohmann::json& j);

/// Backend description recorded in a trace so a mock session can be replayed.
nlohmann::json describe_mock(const backends::MockOptions& options);
backends::MockOptions mock_options_from_json(const nlohmann::json& j);

/// `backend` is stored verbatim under "backend".
TraceDocument make_trace(const SessionResult& result, const nlohmann::json& backend);

/// Writes dir/trace.json and dir/blobs/<hash>.png.
void write_trace(const TraceDocument& trace, const std::filesystem::path& dir);
/// Throws ParseError on a missing or malformed trace.
TraceDocument read_trace(const std::filesystem::path& dir);

/// The inputs and configuration a trace was recorded from, with images decoded from its blobs.
struct RecordedSession {
  SessionInput input;
  LoopConfig config;
  nlohmann::json backend;
};

RecordedSession recorded_session(const TraceDocument& trace);

/// Re-runs the recorded session against mocks rebuilt from the trace's backend description and
/// returns the fresh trace. Throws InvalidArgument when the trace was not recorded with mocks.
TraceDocument replay_trace(const TraceDocument& trace);

}  // namespace refiner
