#include "glean/fs.hpp"

#include <fstream>
#include <sstream>

#include "glean/errors.hpp"

namespace glean {

namespace fsys = std::filesystem;

std::string read_file(const fsys::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    raise(Errc::io, "cannot open file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = std::move(buf).str();
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB &&
      static_cast<unsigned char>(text[2]) == 0xBF) {
    text.erase(0, 3);
  }
  return text;
}

void write_file_atomic(const fsys::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fsys::create_directories(path.parent_path(), ec);
  }
  fsys::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      raise(Errc::io, "cannot write file: " + tmp.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      raise(Errc::io, "short write: " + tmp.string());
    }
  }
  std::error_code ec;
  fsys::rename(tmp, path, ec);
  if (ec) {
    raise(Errc::io, "rename failed: " + path.string() + ": " + ec.message());
  }
}

void append_line(const fsys::path& path, std::string_view line) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fsys::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) {
    raise(Errc::io, "cannot append to file: " + path.string());
  }
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.put('\n');
}

std::vector<nlohmann::json> read_jsonl(const fsys::path& path) {
  std::string text = read_file(path);
  std::vector<nlohmann::json> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    std::string_view line(text.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      nlohmann::json value =
          nlohmann::json::parse(line, /*cb=*/nullptr, /*allow_exceptions=*/false);
      if (value.is_discarded()) {
        raise(Errc::parse, path.string() + ": invalid JSON on line " +
                               std::to_string(line_no));
      }
      rows.push_back(std::move(value));
    }
    if (end == text.size()) break;
    pos = end + 1;
  }
  return rows;
}

std::string to_jsonl(const std::vector<nlohmann::json>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row.dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<std::string> read_lines(const fsys::path& path) {
  std::string text = read_file(path);
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' ||
                             line.back() == '\t')) {
      line.remove_suffix(1);
    }
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) {
      line.remove_prefix(1);
    }
    if (!line.empty() && line.front() != '#') {
      lines.emplace_back(line);
    }
    if (end == text.size()) break;
    pos = end + 1;
  }
  return lines;
}

}  // namespace glean
