#include "glean/structured.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdlib>

#include "glean/errors.hpp"

namespace glean {

namespace {

nlohmann::json scalar_to_json(const YAML::Node& node) {
  const std::string& s = node.Scalar();
  // Quoted scalars carry the "!" tag; they are always strings.
  if (node.Tag() == "!") return s;
  if (s == "null" || s == "Null" || s == "NULL" || s == "~" || s.empty()) {
    return nullptr;
  }
  if (s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "False" || s == "FALSE") return false;

  char* end = nullptr;
  errno = 0;
  long long ll = std::strtoll(s.c_str(), &end, 10);
  if (errno == 0 && end == s.c_str() + s.size() && end != s.c_str()) {
    return static_cast<std::int64_t>(ll);
  }
  errno = 0;
  double d = std::strtod(s.c_str(), &end);
  if (errno == 0 && end == s.c_str() + s.size() && end != s.c_str()) {
    return d;
  }
  return s;
}

nlohmann::json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_to_json(node);
    case YAML::NodeType::Sequence: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& item : node) arr.push_back(yaml_to_json(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      nlohmann::json obj = nlohmann::json::object();
      for (const auto& kv : node) {
        obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      }
      return obj;
    }
    default:
      return nullptr;
  }
}

}  // namespace

nlohmann::json parse_structured_text(std::string_view text,
                                     const std::string& origin) {
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos &&
      (text[first] == '{' || text[first] == '[')) {
    nlohmann::json parsed =
        nlohmann::json::parse(text, /*cb=*/nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) {
      raise(Errc::parse, origin + ": invalid JSON");
    }
    return parsed;
  }
  try {
    YAML::Node node = YAML::Load(std::string(text));
    return yaml_to_json(node);
  } catch (const YAML::Exception& e) {
    raise(Errc::parse, origin + ": invalid YAML: " + e.what());
  }
}

}  // namespace glean
