#include "refiner/trace.hpp"

#include <fmt/format.h>

#include "refiner/backends/protocol.hpp"
#include "refiner/errors.hpp"

namespace refiner {

using nlohmann::json;
namespace fs = std::filesystem;

std::string TraceDocument::text() const { return json.dump(2) + "\n"; }

namespace {

std::string_view to_string(PerceptionPostConfig::Connectivity c) {
  return c == PerceptionPostConfig::Connectivity::four ? "four" : "eight";
}

PerceptionPostConfig::Connectivity parse_connectivity(const std::string& s) {
  if (s == "four") return PerceptionPostConfig::Connectivity::four;
  if (s == "eight") return PerceptionPostConfig::Connectivity::eight;
  throw ParseError(fmt::format("unknown connectivity '{}'", s));
}

class BlobWriter {
 public:
  explicit BlobWriter(std::map<std::string, Bytes>& blobs) : blobs_(blobs) {}

  json image(const ImageRef& ref) {
    const RgbImage raster = load_pixels(ref);
    const std::string hash = content_hash(raster);
    store(hash, [&] { return encode_png_rgb(raster); });
    return {{"id", ref.id}, {"width", ref.width}, {"height", ref.height}, {"blob", hash}};
  }

  json map(const SaliencyMap& m) {
    if (m.size() == 0) return nullptr;
    const std::string hash = content_hash(m);
    store(hash, [&] { return encode_saliency_png16(m); });
    return hash;
  }

  json mask(const BinaryMask& m) {
    if (m.size() == 0) return nullptr;
    const std::string hash = content_hash(m);
    store(hash, [&] { return encode_mask_png(m); });
    return hash;
  }

 private:
  template <typename F>
  void store(const std::string& hash, F&& encode) {
    const std::string name = hash + ".png";
    if (!blobs_.contains(name)) blobs_.emplace(name, encode());
  }

  std::map<std::string, Bytes>& blobs_;
};

json scores_entry(const DimensionScores& s, double overall) { return {{"scores", s}, {"overall", overall}}; }

json turn_entry(const TurnRecord& t, BlobWriter& w, bool complete) {
  json regions = json::array();
  for (const auto& k : t.kinds) {
    json r = {{"kind", k.kind}, {"mask", w.mask(k.mask)}, {"boxes", k.boxes}};
    if (k.reasoning) {
      r["reasoning"] = {{"diagnoses", k.reasoning->diagnoses}, {"summary", k.reasoning->summary}};
    } else {
      r["reasoning"] = nullptr;
    }
    regions.push_back(std::move(r));
  }
  json j = {
      {"turn", t.turn},
      {"perception", {{"artifact_map", w.map(t.artifact_map)}, {"failure_map", w.map(t.failure_map)}}},
      {"regions", std::move(regions)},
      {"joint_mask", w.mask(t.joint_mask)},
  };
  if (complete) {
    j["re_edit_instruction"] = t.re_edit_instruction;
    j["output"] = w.image(t.output);
    j["evaluation"] = scores_entry(t.scores, t.overall);
    j["improved"] = t.improved;
  }
  return j;
}

}  // namespace

json to_json(const LoopConfig& cfg) {
  return {
      {"max_turns", cfg.max_turns},
      {"improvement_epsilon", cfg.improvement_epsilon},
      {"keep_best", cfg.keep_best},
      {"perception_post",
       {{"tau", cfg.perception_post.tau},
        {"connectivity", to_string(cfg.perception_post.connectivity)},
        {"min_component_area", cfg.perception_post.min_component_area}}},
      {"re_edit_template",
       {{"artifact_verb", cfg.re_edit_template.artifact_verb},
        {"failure_verb", cfg.re_edit_template.failure_verb},
        {"separator", cfg.re_edit_template.separator}}},
  };
}

LoopConfig loop_config_from_json(const json& j) {
  try {
    LoopConfig cfg;
    cfg.max_turns = j.at("max_turns").get<int>();
    cfg.improvement_epsilon = j.at("improvement_epsilon").get<double>();
    cfg.keep_best = j.at("keep_best").get<bool>();
    const auto& pp = j.at("perception_post");
    cfg.perception_post.tau = pp.at("tau").get<double>();
    cfg.perception_post.connectivity = parse_connectivity(pp.at("connectivity").get<std::string>());
    cfg.perception_post.min_component_area = pp.at("min_component_area").get<int>();
    const auto& t = j.at("re_edit_template");
    cfg.re_edit_template.artifact_verb = t.at("artifact_verb").get<std::string>();
    cfg.re_edit_template.failure_verb = t.at("failure_verb").get<std::string>();
    cfg.re_edit_template.separator = t.at("separator").get<std::string>();
    return cfg;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("loop config: {}", e.what()));
  }
}

json describe_mock(const backends::MockOptions& options) {
  json j = {{"kind", "mock"}, {"seed", options.seed}, {"evaluation_schedule", options.evaluation_schedule}};
  if (options.fixed_perception) j["fixed_perception"] = backends::to_wire(*options.fixed_perception);
  return j;
}

backends::MockOptions mock_options_from_json(const json& j) {
  try {
    if (j.at("kind").get<std::string>() != "mock") throw InvalidArgument("backend description is not a mock");
    backends::MockOptions options;
    options.seed = j.at("seed").get<std::uint64_t>();
    options.evaluation_schedule = j.at("evaluation_schedule").get<std::vector<DimensionScores>>();
    if (j.contains("fixed_perception")) {
      options.fixed_perception = backends::decode<backends::PerceptionResponse>(j.at("fixed_perception"));
    }
    return options;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("mock description: {}", e.what()));
  }
}

TraceDocument make_trace(const SessionResult& r, const json& backend) {
  TraceDocument doc;
  BlobWriter w(doc.blobs);

  json turns = json::array();
  for (const auto& t : r.history) turns.push_back(turn_entry(t, w, true));

  json& j = doc.json;
  j["format"] = "refiner-trace";
  j["version"] = kTraceVersion;
  j["image_id"] = r.input.image_id;
  j["instruction"] = r.input.instruction;
  j["source"] = w.image(r.input.source);
  j["edited"] = w.image(r.input.edited);
  j["config"] = to_json(r.config);
  j["backend"] = backend;
  j["baseline"] = r.baseline_scores ? scores_entry(*r.baseline_scores, r.baseline_overall) : json(nullptr);
  j["turns"] = std::move(turns);
  j["incomplete_turn"] = r.incomplete_turn ? turn_entry(*r.incomplete_turn, w, false) : json(nullptr);
  j["stop_reason"] = to_string(r.stop_reason);
  j["status"] = r.ok() ? "ok" : "failed";
  j["error"] = r.error ? json(*r.error) : json(nullptr);
  if (r.baseline_scores) {
    j["best"] = {{"turn", r.best_turn}, {"overall", r.best_overall}};
    j["final"] = {{"turn", r.final_turn()}, {"image", w.image(r.final_image())}};
  } else {
    j["best"] = nullptr;
    j["final"] = nullptr;
  }
  return doc;
}

void write_trace(const TraceDocument& trace, const fs::path& dir) {
  const std::string text = trace.text();
  write_file(dir / "trace.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  for (const auto& [name, bytes] : trace.blobs) write_file(dir / "blobs" / name, bytes);
}

TraceDocument read_trace(const fs::path& dir) {
  const auto path = dir / "trace.json";
  if (!fs::exists(path)) throw ParseError(fmt::format("no trace at {}", path.string()));
  const Bytes raw = read_file(path);
  TraceDocument doc;
  doc.json = json::parse(raw.begin(), raw.end(), nullptr, false);
  if (doc.json.is_discarded() || !doc.json.is_object()) throw ParseError(fmt::format("malformed trace {}", path.string()));
  if (doc.json.value("format", "") != "refiner-trace" || doc.json.value("version", 0) != kTraceVersion) {
    throw ParseError(fmt::format("{} is not a version {} trace", path.string(), kTraceVersion));
  }
  const auto blob_dir = dir / "blobs";
  if (fs::is_directory(blob_dir)) {
    for (const auto& entry : fs::directory_iterator(blob_dir)) {
      if (entry.is_regular_file()) doc.blobs.emplace(entry.path().filename().string(), read_file(entry.path()));
    }
  }
  return doc;
}

RecordedSession recorded_session(const TraceDocument& trace) {
  const json& j = trace.json;
  auto image = [&](const json& entry) {
    const auto name = entry.at("blob").get<std::string>() + ".png";
    const auto it = trace.blobs.find(name);
    if (it == trace.blobs.end()) throw ParseError(fmt::format("trace is missing blob {}", name));
    RgbImage raster = decode_png_rgb(it->second);
    if (content_hash(raster) + ".png" != name) throw ParseError(fmt::format("blob {} does not match its hash", name));
    return ImageRef::from_raster(entry.at("id").get<std::string>(), std::move(raster));
  };
  try {
    RecordedSession s;
    s.input.image_id = j.at("image_id").get<std::string>();
    s.input.instruction = j.at("instruction").get<std::string>();
    s.input.source = image(j.at("source"));
    s.input.edited = image(j.at("edited"));
    s.config = loop_config_from_json(j.at("config"));
    s.backend = j.at("backend");
    return s;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("trace: {}", e.what()));
  }
}

TraceDocument replay_trace(const TraceDocument& trace) {
  const RecordedSession s = recorded_session(trace);
  if (!s.backend.is_object() || s.backend.value("kind", "") != "mock") {
    throw InvalidArgument("replay needs a trace recorded with mock backends");
  }
  const auto options = mock_options_from_json(s.backend);
  const auto result = run_session(s.input, backends::make_mock_suite(options), s.config);
  return make_trace(result, s.backend);
}

}  // namespace refiner
