#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace glean {

// Canonical serialization used for digests and cache keys: keys sorted,
// no insignificant whitespace, UTF-8 passthrough, floating-point values
// rendered with fixed 6-decimal precision so that no formatting drift can
// change a digest across platforms or library versions.
//
// Rejects NaN / infinity (they have no canonical text form).
std::string canonical_json(const nlohmann::json& value);

// Fixed 6-decimal rendering of a double ("0.200000"), with -0 normalized.
std::string canonical_number(double value);

}  // namespace glean
