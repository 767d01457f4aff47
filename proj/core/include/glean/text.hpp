#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace glean {

// Decode UTF-8 to code points; invalid bytes decode as U+FFFD.
std::vector<char32_t> utf8_codepoints(std::string_view text);

std::size_t codepoint_count(std::string_view text);

// ASCII-only case fold; non-ASCII bytes pass through untouched. All matching
// in the toolkit is locale-independent by construction.
std::string ascii_fold(std::string_view text);

// Tokens are maximal runs of ASCII alphanumerics or non-ASCII bytes, folded.
std::vector<std::string> tokenize(std::string_view text);

// Edit distance over code points.
std::size_t levenshtein(std::string_view a, std::string_view b);

// Runs of >=2 newlines (blank lines may carry spaces/tabs) collapse to
// exactly "\n\n"; CRLF is normalized; leading/trailing blank lines drop.
// This is the form the paragraph splitter reconstructs.
std::string normalize_blank_lines(std::string_view text);

// Tag-stripping reductions to plain text. Block elements become blank
// lines; script/style bodies and comments are removed; common entities
// are decoded. Markdown loses heading/list/emphasis markers and link
// targets. Both outputs are blank-line normalized.
std::string html_to_text(std::string_view html);
std::string markdown_to_text(std::string_view markdown);

}  // namespace glean
