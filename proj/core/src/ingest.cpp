#include "glean/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "glean/errors.hpp"
#include "glean/fs.hpp"
#include "glean/structured.hpp"
#include "glean/text.hpp"

namespace glean {

namespace fsys = std::filesystem;

std::string make_chunk_id(const std::string& doc_id, std::size_t ordinal) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06zu", ordinal);
  return doc_id + "#" + buf;
}

std::string chunk_doc_id(const std::string& chunk_id) {
  std::size_t pos = chunk_id.rfind('#');
  return pos == std::string::npos ? chunk_id : chunk_id.substr(0, pos);
}

InputFormat parse_input_format(const std::string& name) {
  if (name == "txt") return InputFormat::txt;
  if (name == "csv") return InputFormat::csv;
  if (name == "tsv") return InputFormat::tsv;
  if (name == "jsonl") return InputFormat::jsonl;
  if (name == "markdown" || name == "md") return InputFormat::markdown;
  if (name == "html") return InputFormat::html;
  raise(Errc::format, "unknown input format: '" + name + "'");
}

const char* input_format_name(InputFormat format) {
  switch (format) {
    case InputFormat::txt: return "txt";
    case InputFormat::csv: return "csv";
    case InputFormat::tsv: return "tsv";
    case InputFormat::jsonl: return "jsonl";
    case InputFormat::markdown: return "markdown";
    case InputFormat::html: return "html";
  }
  return "txt";
}

namespace {

bool valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    std::size_t extra;
    if (c < 0x80) extra = 0;
    else if ((c >> 5) == 0x6) extra = 1;
    else if ((c >> 4) == 0xE) extra = 2;
    else if ((c >> 3) == 0x1E) extra = 3;
    else return false;
    if (i + extra >= text.size()) return false;  // truncated sequence
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        return false;
      }
    }
    i += extra + 1;
  }
  return true;
}

const std::set<std::string>& extensions_for(InputFormat format) {
  static const std::set<std::string> txt = {".txt", ".text"};
  static const std::set<std::string> md = {".md", ".markdown"};
  static const std::set<std::string> html = {".html", ".htm"};
  switch (format) {
    case InputFormat::markdown: return md;
    case InputFormat::html: return html;
    default: return txt;
  }
}

std::string reduce_text(InputFormat format, const std::string& raw) {
  switch (format) {
    case InputFormat::markdown: return markdown_to_text(raw);
    case InputFormat::html: return html_to_text(raw);
    default: return raw;
  }
}

std::vector<DocumentRow> load_file_per_document(const fsys::path& source,
                                                InputFormat format) {
  std::vector<fsys::path> files;
  std::error_code ec;
  if (fsys::is_directory(source, ec)) {
    const auto& exts = extensions_for(format);
    for (const auto& entry : fsys::recursive_directory_iterator(source)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = ascii_fold(entry.path().extension().string());
      if (exts.count(ext) != 0) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(source);
  }

  std::vector<DocumentRow> rows;
  rows.reserve(files.size());
  for (const auto& file : files) {
    std::string raw = read_file(file);
    if (!valid_utf8(raw)) {
      raise(Errc::format, "undecodable (not UTF-8): " + file.string());
    }
    DocumentRow row;
    if (fsys::is_directory(source, ec)) {
      fsys::path rel = fsys::relative(file, source);
      row.doc_id = rel.replace_extension().generic_string();
    } else {
      row.doc_id = file.stem().string();
    }
    row.source_path = file.string();
    row.text = reduce_text(format, raw);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string row_doc_id(const std::map<std::string, std::string>& metadata,
                       const std::string& stem, std::size_t row_index) {
  auto it = metadata.find("doc_id");
  if (it == metadata.end()) it = metadata.find("id");
  if (it != metadata.end() && !it->second.empty()) return it->second;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", row_index);
  return stem + ":" + buf;
}

std::vector<DocumentRow> load_delimited(const fsys::path& source, char delim,
                                        const std::string& text_column) {
  if (text_column.empty()) {
    raise(Errc::format, "tabular input needs a text_column");
  }
  std::string raw = read_file(source);
  if (!valid_utf8(raw)) {
    raise(Errc::format, "undecodable (not UTF-8): " + source.string());
  }
  auto table = parse_delimited(raw, delim);
  if (table.empty()) return {};

  const auto& header = table.front();
  auto col = std::find(header.begin(), header.end(), text_column);
  if (col == header.end()) {
    raise(Errc::format, source.string() + ": missing column '" + text_column + "'");
  }
  std::size_t text_idx = static_cast<std::size_t>(col - header.begin());

  std::string stem = source.stem().string();
  std::vector<DocumentRow> rows;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& cells = table[r];
    DocumentRow row;
    for (std::size_t c = 0; c < header.size() && c < cells.size(); ++c) {
      if (c == text_idx) continue;
      row.metadata[header[c]] = cells[c];
    }
    row.text = text_idx < cells.size() ? cells[text_idx] : std::string();
    row.source_path = source.string();
    row.doc_id = row_doc_id(row.metadata, stem, r - 1);
    if (!seen.insert(row.doc_id).second) {
      raise(Errc::format, source.string() + ": duplicate doc id '" +
                              row.doc_id + "'");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<DocumentRow> load_jsonl_rows(const fsys::path& source,
                                         const std::string& text_column) {
  if (text_column.empty()) {
    raise(Errc::format, "jsonl input needs a text_column");
  }
  auto lines = read_jsonl(source);
  std::string stem = source.stem().string();
  std::vector<DocumentRow> rows;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto& obj = lines[r];
    if (!obj.is_object()) {
      raise(Errc::format, source.string() + ": line " + std::to_string(r + 1) +
                              " is not an object");
    }
    auto it = obj.find(text_column);
    if (it == obj.end() || !it->is_string()) {
      raise(Errc::format, source.string() + ": line " + std::to_string(r + 1) +
                              " missing string column '" + text_column + "'");
    }
    DocumentRow row;
    row.text = it->get<std::string>();
    for (auto field = obj.begin(); field != obj.end(); ++field) {
      if (field.key() == text_column) continue;
      const auto& v = field.value();
      row.metadata[field.key()] =
          v.is_string() ? v.get<std::string>() : v.dump();
    }
    row.source_path = source.string();
    row.doc_id = row_doc_id(row.metadata, stem, r);
    if (!seen.insert(row.doc_id).second) {
      raise(Errc::format, source.string() + ": duplicate doc id '" +
                              row.doc_id + "'");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<std::vector<std::string>> parse_delimited(std::string_view text,
                                                      char delimiter) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool in_quotes = false;
  bool row_started = false;

  auto end_cell = [&] {
    row.push_back(std::move(cell));
    cell.clear();
  };
  auto end_row = [&] {
    end_cell();
    rows.push_back(std::move(row));
    row.clear();
    row_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cell.push_back(c);
      }
      continue;
    }
    if (c == '"' && cell.empty()) {
      in_quotes = true;
      row_started = true;
    } else if (c == delimiter) {
      end_cell();
      row_started = true;
    } else if (c == '\n') {
      if (row_started || !cell.empty()) end_row();
    } else if (c == '\r') {
      // swallowed; \r\n and bare \r both end the line at the '\n' branch
      if (i + 1 >= text.size() || text[i + 1] != '\n') {
        if (row_started || !cell.empty()) end_row();
      }
    } else {
      cell.push_back(c);
      row_started = true;
    }
  }
  if (row_started || !cell.empty()) end_row();
  return rows;
}

std::vector<DocumentRow> load_documents(const fsys::path& source,
                                        InputFormat format,
                                        const std::string& text_column) {
  std::error_code ec;
  if (!fsys::exists(source, ec)) {
    raise(Errc::io, "source does not exist: " + source.string());
  }
  switch (format) {
    case InputFormat::txt:
    case InputFormat::markdown:
    case InputFormat::html:
      return load_file_per_document(source, format);
    case InputFormat::csv:
      return load_delimited(source, ',', text_column);
    case InputFormat::tsv:
      return load_delimited(source, '\t', text_column);
    case InputFormat::jsonl:
      return load_jsonl_rows(source, text_column);
  }
  raise(Errc::format, "unhandled input format");
}

namespace {

std::vector<Chunk> split_paragraphs(const DocumentRow& doc) {
  std::string normalized = normalize_blank_lines(doc.text);
  std::vector<Chunk> chunks;
  if (normalized.empty()) return chunks;

  std::size_t pos = 0;
  std::size_t ordinal = 0;
  while (pos <= normalized.size()) {
    std::size_t sep = normalized.find("\n\n", pos);
    std::size_t end = sep == std::string::npos ? normalized.size() : sep;
    Chunk chunk;
    chunk.doc_id = doc.doc_id;
    chunk.ordinal = ordinal;
    chunk.chunk_id = make_chunk_id(doc.doc_id, ordinal);
    chunk.text = normalized.substr(pos, end - pos);
    chunks.push_back(std::move(chunk));
    ++ordinal;
    if (sep == std::string::npos) break;
    pos = sep + 2;
  }
  return chunks;
}

std::vector<Chunk> split_windows(const DocumentRow& doc, std::size_t size,
                                 std::size_t overlap) {
  if (size == 0 || size <= overlap) {
    raise(Errc::config, "fixed_window requires size > overlap >= 0");
  }
  std::vector<Chunk> chunks;
  if (doc.text.empty()) return chunks;

  // Byte offset of each code point start, plus a sentinel at the end.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < doc.text.size(); ++i) {
    if ((static_cast<unsigned char>(doc.text[i]) & 0xC0) != 0x80) {
      starts.push_back(i);
    }
  }
  starts.push_back(doc.text.size());
  std::size_t n = starts.size() - 1;

  std::size_t step = size - overlap;
  std::size_t ordinal = 0;
  for (std::size_t offset = 0; offset < n; offset += step) {
    std::size_t end_cp = std::min(offset + size, n);
    Chunk chunk;
    chunk.doc_id = doc.doc_id;
    chunk.ordinal = ordinal;
    chunk.chunk_id = make_chunk_id(doc.doc_id, ordinal);
    chunk.text = doc.text.substr(starts[offset], starts[end_cp] - starts[offset]);
    chunks.push_back(std::move(chunk));
    ++ordinal;
  }
  return chunks;
}

}  // namespace

std::vector<Chunk> split(const DocumentRow& doc, const SplitStrategy& strategy) {
  switch (strategy.kind) {
    case SplitStrategy::Kind::paragraph:
      return split_paragraphs(doc);
    case SplitStrategy::Kind::fixed_window:
      return split_windows(doc, strategy.window_size, strategy.overlap);
    case SplitStrategy::Kind::whole_document: {
      if (doc.text.empty()) return {};
      Chunk chunk;
      chunk.doc_id = doc.doc_id;
      chunk.ordinal = 0;
      chunk.chunk_id = make_chunk_id(doc.doc_id, 0);
      chunk.text = doc.text;
      return {std::move(chunk)};
    }
  }
  return {};
}

}  // namespace glean
