#include "glean/canonical.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <string>

#include "glean/errors.hpp"

namespace glean {

namespace {

void append_escaped(std::string& out, const std::string& s) {
  out.push_back('"');
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(static_cast<char>(c));
        }
    }
  }
  out.push_back('"');
}

void write_value(std::string& out, const nlohmann::json& v) {
  switch (v.type()) {
    case nlohmann::json::value_t::null:
      out += "null";
      break;
    case nlohmann::json::value_t::boolean:
      out += v.get<bool>() ? "true" : "false";
      break;
    case nlohmann::json::value_t::number_integer:
      out += std::to_string(v.get<std::int64_t>());
      break;
    case nlohmann::json::value_t::number_unsigned:
      out += std::to_string(v.get<std::uint64_t>());
      break;
    case nlohmann::json::value_t::number_float:
      out += canonical_number(v.get<double>());
      break;
    case nlohmann::json::value_t::string:
      append_escaped(out, v.get_ref<const std::string&>());
      break;
    case nlohmann::json::value_t::array: {
      out.push_back('[');
      bool first = true;
      for (const auto& item : v) {
        if (!first) out.push_back(',');
        first = false;
        write_value(out, item);
      }
      out.push_back(']');
      break;
    }
    case nlohmann::json::value_t::object: {
      // nlohmann::json objects iterate in key order already; re-sorting via
      // std::map keeps this correct even for ordered_json inputs.
      std::map<std::string, const nlohmann::json*> sorted;
      for (auto it = v.begin(); it != v.end(); ++it) {
        sorted.emplace(it.key(), &it.value());
      }
      out.push_back('{');
      bool first = true;
      for (const auto& [key, val] : sorted) {
        if (!first) out.push_back(',');
        first = false;
        append_escaped(out, key);
        out.push_back(':');
        write_value(out, *val);
      }
      out.push_back('}');
      break;
    }
    default:
      raise(Errc::internal, "canonical_json: unsupported value type");
  }
}

}  // namespace

std::string canonical_number(double value) {
  if (!std::isfinite(value)) {
    raise(Errc::internal, "canonical_number: non-finite value");
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

std::string canonical_json(const nlohmann::json& value) {
  std::string out;
  out.reserve(256);
  write_value(out, value);
  return out;
}

}  // namespace glean
