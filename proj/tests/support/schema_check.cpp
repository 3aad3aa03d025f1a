#include "schema_check.hpp"

#include <fstream>
#include <stdexcept>

namespace refiner::testing {

namespace {

bool has_type(const nlohmann::json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  throw std::logic_error("schema uses unsupported type " + type);
}

}  // namespace

SchemaChecker SchemaChecker::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schema " + path.string());
  return SchemaChecker(nlohmann::json::parse(in));
}

const nlohmann::json& SchemaChecker::resolve(const nlohmann::json& schema) const {
  if (!schema.contains("$ref")) return schema;
  const auto ref = schema.at("$ref").get<std::string>();
  const std::string prefix = "#/definitions/";
  if (ref.rfind(prefix, 0) != 0) throw std::logic_error("unsupported $ref " + ref);
  return resolve(schema_.at("definitions").at(ref.substr(prefix.size())));
}

std::vector<std::string> SchemaChecker::check(const nlohmann::json& instance, const std::string& definition) const {
  std::vector<std::string> out;
  check_node(instance, schema_.at("definitions").at(definition), definition, out);
  return out;
}

void SchemaChecker::check_node(const nlohmann::json& instance, const nlohmann::json& raw, const std::string& where,
                               std::vector<std::string>& out) const {
  const auto& s = resolve(raw);
  if (s.contains("type") && !has_type(instance, s.at("type").get<std::string>())) {
    out.push_back(where + ": expected " + s.at("type").get<std::string>());
    return;
  }
  if (s.contains("enum")) {
    bool found = false;
    for (const auto& e : s.at("enum")) found = found || e == instance;
    if (!found) out.push_back(where + ": value not in enum");
  }
  if (instance.is_number()) {
    const double v = instance.get<double>();
    if (s.contains("minimum") && v < s.at("minimum").get<double>()) out.push_back(where + ": below minimum");
    if (s.contains("maximum") && v > s.at("maximum").get<double>()) out.push_back(where + ": above maximum");
    if (s.contains("exclusiveMinimum") && v <= s.at("exclusiveMinimum").get<double>()) {
      out.push_back(where + ": not above exclusiveMinimum");
    }
  }
  if (instance.is_string() && s.contains("minLength") &&
      instance.get<std::string>().size() < s.at("minLength").get<std::size_t>()) {
    out.push_back(where + ": shorter than minLength");
  }
  if (instance.is_array() && s.contains("items")) {
    for (std::size_t i = 0; i < instance.size(); ++i) {
      check_node(instance[i], s.at("items"), where + "[" + std::to_string(i) + "]", out);
    }
  }
  if (instance.is_object()) {
    if (s.contains("required")) {
      for (const auto& key : s.at("required")) {
        if (!instance.contains(key.get<std::string>())) out.push_back(where + ": missing " + key.get<std::string>());
      }
    }
    const auto props = s.value("properties", nlohmann::json::object());
    for (const auto& [key, value] : instance.items()) {
      if (props.contains(key)) {
        check_node(value, props.at(key), where + "." + key, out);
      } else if (s.contains("additionalProperties") && !s.at("additionalProperties").get<bool>()) {
        out.push_back(where + ": unexpected property " + key);
      }
    }
  }
  if (s.contains("oneOf")) {
    int matches = 0;
    for (const auto& alt : s.at("oneOf")) {
      std::vector<std::string> sub;
      check_node(instance, alt, where, sub);
      if (sub.empty()) ++matches;
    }
    if (matches != 1) out.push_back(where + ": matches " + std::to_string(matches) + " oneOf branches");
  }
}

}  // namespace refiner::testing
