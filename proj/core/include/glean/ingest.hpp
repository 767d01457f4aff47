#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace glean {

struct DocumentRow {
  std::string doc_id;       // unique within a run
  std::string source_path;
  std::string text;         // valid UTF-8, full document text
  std::map<std::string, std::string> metadata;  // e.g. tabular column values
};

struct Chunk {
  std::string chunk_id;  // "<doc_id>#<zero-padded ordinal>"
  std::string doc_id;
  std::size_t ordinal = 0;
  std::string text;
  std::optional<double> relevance_score;
};

std::string make_chunk_id(const std::string& doc_id, std::size_t ordinal);
std::string chunk_doc_id(const std::string& chunk_id);

// txt/markdown/html sources may be a single file or a directory (scanned
// recursively, rows ordered by relative path). csv/tsv/jsonl are one row
// per record; `text_column` names the column holding the document text and
// the remaining columns land in metadata. jsonl stands in for columnar
// tabular inputs; a pre-extracted .txt path is the supported route for
// scanned formats.
enum class InputFormat { txt, csv, tsv, jsonl, markdown, html };

InputFormat parse_input_format(const std::string& name);
const char* input_format_name(InputFormat format);

std::vector<DocumentRow> load_documents(const std::filesystem::path& source,
                                        InputFormat format,
                                        const std::string& text_column = "");

struct SplitStrategy {
  enum class Kind { paragraph, fixed_window, whole_document };

  Kind kind = Kind::paragraph;
  std::size_t window_size = 0;  // fixed_window: in code points
  std::size_t overlap = 0;      // fixed_window: window_size > overlap >= 0

  static SplitStrategy paragraph() { return {Kind::paragraph, 0, 0}; }
  static SplitStrategy fixed_window(std::size_t size, std::size_t overlap) {
    return {Kind::fixed_window, size, overlap};
  }
  static SplitStrategy whole_document() { return {Kind::whole_document, 0, 0}; }
};

// Deterministic: identical (doc, strategy) yields identical chunk ids and
// texts. An empty document yields an empty list. Paragraph chunks join with
// "\n\n" back into the blank-line-normalized document.
std::vector<Chunk> split(const DocumentRow& doc, const SplitStrategy& strategy);

// RFC 4180-style parser shared by the csv/tsv loaders. Exposed for tests.
std::vector<std::vector<std::string>> parse_delimited(std::string_view text,
                                                      char delimiter);

}  // namespace glean
