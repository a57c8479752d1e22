#pragma once

#include <string>

#include "fairlens/data.hpp"
#include "fairlens/error.hpp"
#include "json.hpp"

namespace fairlens::json_util {

using nlohmann::json;

inline json schema_to_json(const Schema& schema) {
  json out = json::array();
  for (const auto& f : schema) {
    json entry{{"name", f.name}, {"kind", std::string(to_string(f.kind))}};
    if (f.is_categorical()) entry["categories"] = f.categories;
    out.push_back(std::move(entry));
  }
  return out;
}

inline Schema schema_from_json(const json& j) {
  Schema schema;
  for (const auto& entry : j) {
    FeatureSchema f;
    f.name = entry.at("name").get<std::string>();
    f.kind = parse_feature_kind(entry.at("kind").get<std::string>());
    if (f.is_categorical()) f.categories = entry.at("categories").get<std::vector<std::string>>();
    schema.push_back(std::move(f));
  }
  validate_schema(schema);
  return schema;
}

// Deterministic text form: sorted keys, two-space indent, trailing newline.
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace fairlens::json_util
