#include "glean/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

namespace glean {

namespace {

bool is_hspace(char c) { return c == ' ' || c == '\t'; }

bool is_token_byte(unsigned char c) {
  return std::isalnum(c) != 0 || c >= 0x80;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

}  // namespace

std::vector<char32_t> utf8_codepoints(std::string_view text) {
  std::vector<char32_t> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    char32_t cp = 0xFFFD;
    std::size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6 && i + 1 < text.size()) {
      cp = static_cast<char32_t>(c & 0x1F) << 6 |
           (static_cast<unsigned char>(text[i + 1]) & 0x3F);
      len = 2;
    } else if ((c >> 4) == 0xE && i + 2 < text.size()) {
      cp = static_cast<char32_t>(c & 0x0F) << 12 |
           (static_cast<char32_t>(static_cast<unsigned char>(text[i + 1]) & 0x3F)
            << 6) |
           (static_cast<unsigned char>(text[i + 2]) & 0x3F);
      len = 3;
    } else if ((c >> 3) == 0x1E && i + 3 < text.size()) {
      cp = static_cast<char32_t>(c & 0x07) << 18 |
           (static_cast<char32_t>(static_cast<unsigned char>(text[i + 1]) & 0x3F)
            << 12) |
           (static_cast<char32_t>(static_cast<unsigned char>(text[i + 2]) & 0x3F)
            << 6) |
           (static_cast<unsigned char>(text[i + 3]) & 0x3F);
      len = 4;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::size_t codepoint_count(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string ascii_fold(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
  });
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_token_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && is_token_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    tokens.push_back(ascii_fold(text.substr(start, i - start)));
  }
  return tokens;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<char32_t> u = utf8_codepoints(a);
  std::vector<char32_t> v = utf8_codepoints(b);
  if (u.empty()) return v.size();
  if (v.empty()) return u.size();

  std::vector<std::size_t> prev(v.size() + 1), cur(v.size() + 1);
  for (std::size_t j = 0; j <= v.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= u.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= v.size(); ++j) {
      std::size_t sub = prev[j - 1] + (u[i - 1] == v[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[v.size()];
}

std::string normalize_blank_lines(std::string_view text) {
  // CRLF / CR -> LF first.
  std::string lf;
  lf.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;
      lf.push_back('\n');
    } else {
      lf.push_back(text[i]);
    }
  }

  std::string out;
  out.reserve(lf.size());
  std::size_t i = 0;
  while (i < lf.size()) {
    if (lf[i] != '\n') {
      out.push_back(lf[i]);
      ++i;
      continue;
    }
    // Count consecutive newlines, skipping whitespace-only interior lines.
    std::size_t newlines = 1;
    std::size_t j = i + 1;
    while (true) {
      std::size_t k = j;
      while (k < lf.size() && is_hspace(lf[k])) ++k;
      if (k < lf.size() && lf[k] == '\n') {
        ++newlines;
        j = k + 1;
      } else {
        break;
      }
    }
    out.append(newlines >= 2 ? 2 : 1, '\n');
    i = j;
  }

  // Drop leading blank lines.
  while (true) {
    std::size_t j = 0;
    while (j < out.size() && is_hspace(out[j])) ++j;
    if (j < out.size() && out[j] == '\n') {
      out.erase(0, j + 1);
    } else {
      break;
    }
  }
  // Drop trailing blank lines.
  while (!out.empty()) {
    std::size_t k = out.size();
    while (k > 0 && is_hspace(out[k - 1])) --k;
    if (k > 0 && out[k - 1] == '\n') {
      out.resize(k - 1);
    } else {
      break;
    }
  }
  return out;
}

namespace {

const std::unordered_set<std::string>& block_tags() {
  static const std::unordered_set<std::string> tags = {
      "p",       "div",     "h1",    "h2",      "h3",     "h4",
      "h5",      "h6",      "li",    "ul",      "ol",     "tr",
      "table",   "thead",   "tbody", "section", "article", "header",
      "footer",  "blockquote", "pre", "figure", "aside",  "main",
      "form",    "hr",      "nav",   "address", "dl",     "dt",   "dd"};
  return tags;
}

std::string decode_entity(std::string_view entity) {
  static const std::unordered_map<std::string, std::string> named = {
      {"amp", "&"},  {"lt", "<"},    {"gt", ">"},  {"quot", "\""},
      {"apos", "'"}, {"nbsp", " "},  {"mdash", "—"},
      {"ndash", "–"}, {"hellip", "…"}, {"copy", "©"}};
  if (entity.empty()) return {};
  if (entity[0] == '#') {
    char32_t cp = 0;
    std::size_t i = 1;
    int base = 10;
    if (i < entity.size() && (entity[i] == 'x' || entity[i] == 'X')) {
      base = 16;
      ++i;
    }
    for (; i < entity.size(); ++i) {
      char c = entity[i];
      int digit;
      if (c >= '0' && c <= '9') digit = c - '0';
      else if (base == 16 && c >= 'a' && c <= 'f') digit = c - 'a' + 10;
      else if (base == 16 && c >= 'A' && c <= 'F') digit = c - 'A' + 10;
      else return {};
      cp = cp * static_cast<char32_t>(base) + static_cast<char32_t>(digit);
    }
    std::string out;
    append_utf8(out, cp);
    return out;
  }
  auto it = named.find(std::string(entity));
  return it == named.end() ? std::string() : it->second;
}

std::string collapse_hspace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_hspace(c)) {
      pending_space = !out.empty() && out.back() != '\n';
      continue;
    }
    if (c == '\n') {
      pending_space = false;
      out.push_back('\n');
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string html_to_text(std::string_view html) {
  std::string out;
  out.reserve(html.size());
  std::size_t i = 0;
  std::string skip_until;  // closing tag name while inside script/style

  while (i < html.size()) {
    char c = html[i];
    if (c == '<') {
      // Comment?
      if (html.compare(i, 4, "<!--") == 0) {
        std::size_t end = html.find("-->", i + 4);
        i = end == std::string_view::npos ? html.size() : end + 3;
        continue;
      }
      std::size_t end = html.find('>', i);
      if (end == std::string_view::npos) break;
      std::string_view tag = html.substr(i + 1, end - i - 1);
      bool closing = !tag.empty() && tag[0] == '/';
      if (closing) tag.remove_prefix(1);
      std::size_t name_end = 0;
      while (name_end < tag.size() &&
             (std::isalnum(static_cast<unsigned char>(tag[name_end])) != 0)) {
        ++name_end;
      }
      std::string name = ascii_fold(tag.substr(0, name_end));
      i = end + 1;

      if (!skip_until.empty()) {
        if (closing && name == skip_until) skip_until.clear();
        continue;
      }
      if (!closing && (name == "script" || name == "style")) {
        skip_until = name;
        continue;
      }
      if (name == "br") {
        out.push_back('\n');
      } else if (block_tags().count(name) != 0) {
        out += "\n\n";
      }
      continue;
    }
    if (!skip_until.empty()) {
      ++i;
      continue;
    }
    if (c == '&') {
      std::size_t semi = html.find(';', i);
      if (semi != std::string_view::npos && semi - i <= 10) {
        std::string decoded = decode_entity(html.substr(i + 1, semi - i - 1));
        if (!decoded.empty()) {
          out += decoded;
          i = semi + 1;
          continue;
        }
      }
      out.push_back('&');
      ++i;
      continue;
    }
    out.push_back(c);
    ++i;
  }
  return normalize_blank_lines(collapse_hspace(out));
}

std::string markdown_to_text(std::string_view markdown) {
  std::string out;
  out.reserve(markdown.size());
  std::size_t pos = 0;
  bool in_fence = false;

  while (pos <= markdown.size()) {
    std::size_t end = markdown.find('\n', pos);
    if (end == std::string_view::npos) end = markdown.size();
    std::string_view line = markdown.substr(pos, end - pos);

    std::string_view trimmed = line;
    while (!trimmed.empty() && is_hspace(trimmed.front())) trimmed.remove_prefix(1);

    if (trimmed.starts_with("```") || trimmed.starts_with("~~~")) {
      in_fence = !in_fence;
      out.push_back('\n');
      pos = end + 1;
      if (end == markdown.size()) break;
      continue;
    }

    std::string_view body = line;
    if (!in_fence) {
      // Heading markers.
      std::size_t h = 0;
      while (h < trimmed.size() && trimmed[h] == '#') ++h;
      if (h > 0 && h <= 6 && h < trimmed.size() && trimmed[h] == ' ') {
        body = trimmed.substr(h + 1);
      } else if (trimmed.starts_with("- ") || trimmed.starts_with("* ") ||
                 trimmed.starts_with("+ ")) {
        body = trimmed.substr(2);
      } else if (trimmed.starts_with("> ")) {
        body = trimmed.substr(2);
      } else {
        // Ordered-list marker: digits followed by ". ".
        std::size_t d = 0;
        while (d < trimmed.size() &&
               std::isdigit(static_cast<unsigned char>(trimmed[d])) != 0) {
          ++d;
        }
        if (d > 0 && d + 1 < trimmed.size() && trimmed[d] == '.' &&
            trimmed[d + 1] == ' ') {
          body = trimmed.substr(d + 2);
        }
      }
    }

    std::string rendered;
    rendered.reserve(body.size());
    for (std::size_t i = 0; i < body.size(); ++i) {
      char c = body[i];
      if (!in_fence && (c == '*' || c == '`')) continue;
      if (!in_fence && c == '!' && i + 1 < body.size() && body[i + 1] == '[') {
        continue;  // image marker; the [alt] handling below keeps the alt text
      }
      if (!in_fence && c == '[') {
        std::size_t close = body.find(']', i);
        if (close != std::string_view::npos && close + 1 < body.size() &&
            body[close + 1] == '(') {
          std::size_t paren = body.find(')', close + 2);
          if (paren != std::string_view::npos) {
            rendered.append(body.substr(i + 1, close - i - 1));
            i = paren;
            continue;
          }
        }
      }
      rendered.push_back(c);
    }
    out += rendered;
    out.push_back('\n');
    if (end == markdown.size()) break;
    pos = end + 1;
  }
  return normalize_blank_lines(out);
}

}  // namespace glean
