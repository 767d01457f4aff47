#pragma once

#include <string>
#include <string_view>

namespace glean {

// Hash algorithm backing every digest in the toolkit. Recorded in store
// headers so a future algorithm change is detectable, never silent.
inline constexpr const char* kDigestAlgorithm = "sha256";

// Lowercase hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view bytes);

}  // namespace glean
