#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace glean {

// Parse a structured-config document. Text starting with '{' or '[' is
// treated as JSON (exact numeric types); anything else goes through the
// YAML parser with scalar type inference (quoted scalars stay strings).
// `origin` is used in error messages only. Throws Errc::parse.
nlohmann::json parse_structured_text(std::string_view text,
                                     const std::string& origin);

}  // namespace glean
