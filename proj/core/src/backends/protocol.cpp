#include "refiner/backends/protocol.hpp"

#include <fmt/format.h>

#include "refiner/encoding.hpp"
#include "refiner/errors.hpp"
#include "refiner/raster_io.hpp"

namespace refiner::backends {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& what) { throw ProtocolError("malformed", what); }

template <typename Fn>
auto guarded(const char* message, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    malformed(fmt::format("{}: {}", message, e.what()));
  } catch (const ParseError& e) {
    malformed(fmt::format("{}: {}", message, e.what()));
  } catch (const InvalidArgument& e) {
    malformed(fmt::format("{}: {}", message, e.what()));
  }
}

Bytes bytes_field(const json& j, const char* key) {
  return base64_decode(j.at(key).get<std::string>());
}

}  // namespace

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::perception:
      return "perception";
    case AgentKind::reasoning:
      return "reasoning";
    case AgentKind::action:
      return "action";
    case AgentKind::evaluation:
      return "evaluation";
  }
  return "unknown";
}

std::string_view endpoint_path(AgentKind kind) {
  switch (kind) {
    case AgentKind::perception:
      return "/perceive";
    case AgentKind::reasoning:
      return "/reason";
    case AgentKind::action:
      return "/act";
    case AgentKind::evaluation:
      return "/evaluate";
  }
  return "/";
}

json parse_wire_json(std::string_view text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) malformed("body is not valid JSON");
  return j;
}

// --- leaf payloads -----------------------------------------------------------

json to_wire(const ImageRef& image) {
  const Bytes png = encode_png_rgb(load_pixels(image));
  return {{"id", image.id}, {"width", image.width}, {"height", image.height}, {"png_base64", base64_encode(png)}};
}

void from_wire(const json& j, ImageRef& out) {
  guarded("image", [&] {
    RgbImage raster = decode_png_rgb(bytes_field(j, "png_base64"));
    const int w = j.at("width").get<int>();
    const int h = j.at("height").get<int>();
    if (raster.width != w || raster.height != h) {
      malformed(fmt::format("image payload is {}x{} but declared {}x{}", raster.width, raster.height, w, h));
    }
    out = ImageRef::from_raster(j.at("id").get<std::string>(), std::move(raster));
    return 0;
  });
}

json to_wire(const SaliencyMap& map) {
  return {{"width", map.width()}, {"height", map.height()}, {"png16_base64", base64_encode(encode_saliency_png16(map))}};
}

void from_wire(const json& j, SaliencyMap& out) {
  guarded("saliency map", [&] {
    const int w = j.at("width").get<int>();
    const int h = j.at("height").get<int>();
    if (j.contains("values")) {
      auto values = j.at("values").get<std::vector<double>>();
      for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) throw InvariantViolation("saliency value out of [0,1]");
      }
      if (values.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h) || w < 1 || h < 1) {
        malformed(fmt::format("saliency map declares {}x{} but carries {} values", w, h, values.size()));
      }
      out = SaliencyMap(w, h, std::move(values));
    } else {
      SaliencyMap decoded = decode_saliency_png(bytes_field(j, "png16_base64"));
      if (decoded.width() != w || decoded.height() != h) {
        malformed(fmt::format("saliency payload is {}x{} but declared {}x{}", decoded.width(), decoded.height(), w, h));
      }
      out = std::move(decoded);
    }
    return 0;
  });
}

json to_wire(const BinaryMask& mask) {
  return {{"width", mask.width()}, {"height", mask.height()}, {"png1_base64", base64_encode(encode_mask_png(mask))}};
}

void from_wire(const json& j, BinaryMask& out) {
  guarded("mask", [&] {
    BinaryMask decoded = decode_mask_png(bytes_field(j, "png1_base64"));
    if (decoded.width() != j.at("width").get<int>() || decoded.height() != j.at("height").get<int>()) {
      malformed("mask payload dimensions differ from declared dimensions");
    }
    out = std::move(decoded);
    return 0;
  });
}

// --- messages ----------------------------------------------------------------

json to_wire(const PerceptionRequest& m) {
  return {{"source", to_wire(m.source)}, {"edited", to_wire(m.edited)}, {"instruction", m.instruction}};
}

void from_wire(const json& j, PerceptionRequest& out) {
  guarded("perception request", [&] {
    from_wire(j.at("source"), out.source);
    from_wire(j.at("edited"), out.edited);
    out.instruction = j.at("instruction").get<std::string>();
    return 0;
  });
}

json to_wire(const PerceptionResponse& m) {
  return {{"artifact_map", to_wire(m.artifact_map)}, {"failure_map", to_wire(m.failure_map)}};
}

void from_wire(const json& j, PerceptionResponse& out) {
  guarded("perception response", [&] {
    from_wire(j.at("artifact_map"), out.artifact_map);
    from_wire(j.at("failure_map"), out.failure_map);
    return 0;
  });
}

json to_wire(const ReasoningRequest& m) {
  return {{"source", to_wire(m.source)},
          {"edited", to_wire(m.edited)},
          {"instruction", m.instruction},
          {"region_kind", m.region_kind},
          {"boxes", m.boxes}};
}

void from_wire(const json& j, ReasoningRequest& out) {
  guarded("reasoning request", [&] {
    from_wire(j.at("source"), out.source);
    from_wire(j.at("edited"), out.edited);
    out.instruction = j.at("instruction").get<std::string>();
    out.region_kind = j.at("region_kind").get<RegionKind>();
    out.boxes = j.at("boxes").get<std::vector<BoundingBox>>();
    return 0;
  });
}

json to_wire(const ReasoningResponse& m) { return {{"diagnoses", m.diagnoses}, {"summary", m.summary}}; }

void from_wire(const json& j, ReasoningResponse& out) {
  guarded("reasoning response", [&] {
    out.diagnoses = j.at("diagnoses").get<std::vector<FlawDiagnosis>>();
    out.summary = j.at("summary").get<std::string>();
    return 0;
  });
}

json to_wire(const ActionRequest& m) {
  return {{"source", to_wire(m.source)},
          {"previous_edit", to_wire(m.previous_edit)},
          {"re_edit_instruction", m.re_edit_instruction},
          {"mask", to_wire(m.mask)}};
}

void from_wire(const json& j, ActionRequest& out) {
  guarded("action request", [&] {
    from_wire(j.at("source"), out.source);
    from_wire(j.at("previous_edit"), out.previous_edit);
    out.re_edit_instruction = j.at("re_edit_instruction").get<std::string>();
    from_wire(j.at("mask"), out.mask);
    return 0;
  });
}

json to_wire(const ActionResponse& m) { return {{"re_edited", to_wire(m.re_edited)}}; }

void from_wire(const json& j, ActionResponse& out) {
  guarded("action response", [&] {
    from_wire(j.at("re_edited"), out.re_edited);
    return 0;
  });
}

json to_wire(const EvaluationRequest& m) {
  return {{"source", to_wire(m.source)}, {"edited", to_wire(m.edited)}, {"instruction", m.instruction}};
}

void from_wire(const json& j, EvaluationRequest& out) {
  guarded("evaluation request", [&] {
    from_wire(j.at("source"), out.source);
    from_wire(j.at("edited"), out.edited);
    out.instruction = j.at("instruction").get<std::string>();
    return 0;
  });
}

json to_wire(const EvaluationResponse& m) { return {{"scores", m.scores}}; }

void from_wire(const json& j, EvaluationResponse& out) {
  guarded("evaluation response", [&] {
    out.scores = j.at("scores").get<DimensionScores>();
    return 0;
  });
}

json to_wire(const ErrorBody& m) { return {{"code", m.code}, {"message", m.message}}; }

void from_wire(const json& j, ErrorBody& out) {
  guarded("error body", [&] {
    out.code = j.at("code").get<std::string>();
    out.message = j.at("message").get<std::string>();
    return 0;
  });
}

}  // namespace refiner::backends
