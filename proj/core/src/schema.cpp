#include "glean/schema.hpp"

#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "glean/canonical.hpp"
#include "glean/digest.hpp"
#include "glean/errors.hpp"
#include "glean/fs.hpp"
#include "glean/structured.hpp"

namespace glean {

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (std::isalpha(static_cast<unsigned char>(s[0])) == 0 && s[0] != '_') {
    return false;
  }
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) == 0 && c != '_') {
      return false;
    }
  }
  return true;
}

const char* base_name(FieldKind::Base b) {
  switch (b) {
    case FieldKind::Base::boolean: return "boolean";
    case FieldKind::Base::integer: return "integer";
    case FieldKind::Base::number: return "number";
    case FieldKind::Base::string: return "string";
    case FieldKind::Base::enumeration: return "enum";
  }
  return "string";
}

struct Placeholder {
  std::string name;
  std::size_t begin;  // index of '{'
  std::size_t end;    // index one past '}'
};

// A placeholder is "{identifier}" exactly; any other brace sequence is
// literal text, so JSON examples inside prompts survive untouched.
std::vector<Placeholder> find_placeholders(std::string_view text) {
  std::vector<Placeholder> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '{') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[j])) != 0 ||
            text[j] == '_')) {
      ++j;
    }
    if (j > i + 1 && j < text.size() && text[j] == '}') {
      out.push_back({std::string(text.substr(i + 1, j - i - 1)), i, j + 1});
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

void check_template(const std::string& tmpl) {
  int chunk_text_count = 0;
  for (const auto& ph : find_placeholders(tmpl)) {
    if (ph.name == "chunk_text") {
      ++chunk_text_count;
    } else if (ph.name != "field_docs") {
      raise(Errc::template_error,
            "prompt_template: unknown placeholder {" + ph.name + "}");
    }
  }
  if (chunk_text_count != 1) {
    raise(Errc::schema,
          "prompt_template must contain {chunk_text} exactly once (found " +
              std::to_string(chunk_text_count) + ")");
  }
}

}  // namespace

std::string FieldKind::to_string() const {
  std::string s = base_name(base);
  for (int i = 0; i < list_depth; ++i) s = "list-of(" + s + ")";
  return s;
}

FieldKind FieldKind::parse(const std::string& text) {
  std::string_view s(text);
  int depth = 0;
  while (s.starts_with("list-of(") && s.ends_with(")")) {
    s.remove_prefix(8);
    s.remove_suffix(1);
    ++depth;
  }
  if (depth > 2) {
    raise(Errc::schema, "field kind '" + text + "': list nesting deeper than 2");
  }
  FieldKind kind;
  kind.list_depth = depth;
  if (s == "boolean") kind.base = Base::boolean;
  else if (s == "integer") kind.base = Base::integer;
  else if (s == "number") kind.base = Base::number;
  else if (s == "string") kind.base = Base::string;
  else if (s == "enum" || s == "enum-of-strings") kind.base = Base::enumeration;
  else raise(Errc::schema, "unknown field kind: '" + text + "'");
  return kind;
}

nlohmann::json ExtractionSchema::to_canonical_json() const {
  nlohmann::json fields_json = nlohmann::json::array();
  for (const auto& f : fields) {
    nlohmann::json fj{{"name", f.name},
                      {"kind", f.kind.to_string()},
                      {"description", f.description},
                      {"required", f.required}};
    if (f.kind.base == FieldKind::Base::enumeration) {
      fj["values"] = f.kind.enum_values;
    }
    fields_json.push_back(std::move(fj));
  }
  return nlohmann::json{
      {"name", schema_name},
      {"container", container == Container::single_record ? "single-record"
                                                          : "list-of-records"},
      {"system_prompt", system_prompt},
      {"prompt_template", prompt_template},
      {"fields", std::move(fields_json)}};
}

std::string ExtractionSchema::serialize() const {
  return canonical_json(to_canonical_json());
}

ExtractionSchema load_schema(std::string_view spec_text) {
  nlohmann::json doc = parse_structured_text(spec_text, "schema spec");
  if (!doc.is_object()) {
    raise(Errc::parse, "schema spec: top level must be a mapping");
  }

  ExtractionSchema schema;
  if (!doc.contains("name") || !doc["name"].is_string()) {
    raise(Errc::schema, "schema spec: missing 'name'");
  }
  schema.schema_name = doc["name"].get<std::string>();
  if (!is_identifier(schema.schema_name)) {
    raise(Errc::schema, "schema name is not an identifier: '" +
                            schema.schema_name + "'");
  }

  std::string container = doc.value("container", std::string("single-record"));
  if (container == "single-record") {
    schema.container = Container::single_record;
  } else if (container == "list-of-records") {
    schema.container = Container::list_of_records;
  } else {
    raise(Errc::schema, "unknown container: '" + container + "'");
  }

  schema.system_prompt = doc.value("system_prompt", std::string());
  if (!doc.contains("prompt_template") || !doc["prompt_template"].is_string()) {
    raise(Errc::schema, "schema spec: missing 'prompt_template'");
  }
  schema.prompt_template = doc["prompt_template"].get<std::string>();
  check_template(schema.prompt_template);

  if (!doc.contains("fields") || !doc["fields"].is_array() ||
      doc["fields"].empty()) {
    raise(Errc::schema, "schema spec: 'fields' must be a non-empty list");
  }

  std::set<std::string> seen;
  for (const auto& fj : doc["fields"]) {
    if (!fj.is_object() || !fj.contains("name") || !fj["name"].is_string()) {
      raise(Errc::schema, "field entry missing 'name'");
    }
    FieldSpec field;
    field.name = fj["name"].get<std::string>();
    if (!is_identifier(field.name)) {
      raise(Errc::schema, "field name is not an identifier: '" + field.name + "'");
    }
    if (!seen.insert(field.name).second) {
      raise(Errc::schema, "duplicate field name: '" + field.name + "'");
    }
    if (!fj.contains("kind") || !fj["kind"].is_string()) {
      raise(Errc::schema, "field '" + field.name + "': missing 'kind'");
    }
    field.kind = FieldKind::parse(fj["kind"].get<std::string>());
    if (field.kind.base == FieldKind::Base::enumeration) {
      if (!fj.contains("values") || !fj["values"].is_array() ||
          fj["values"].empty()) {
        raise(Errc::schema,
              "field '" + field.name + "': enum kind needs >=1 allowed value");
      }
      for (const auto& v : fj["values"]) {
        if (!v.is_string()) {
          raise(Errc::schema,
                "field '" + field.name + "': enum values must be strings");
        }
        field.kind.enum_values.push_back(v.get<std::string>());
      }
    } else if (fj.contains("values")) {
      raise(Errc::schema,
            "field '" + field.name + "': 'values' only applies to enum kinds");
    }
    field.description = fj.value("description", std::string());
    field.required = fj.value("required", true);
    schema.fields.push_back(std::move(field));
  }

  schema.digest = sha256_hex(schema.serialize());
  return schema;
}

ExtractionSchema load_schema_file(const std::filesystem::path& path) {
  return load_schema(read_file(path));
}

std::string render_field_docs(const ExtractionSchema& schema) {
  std::string out;
  for (const auto& f : schema.fields) {
    out += "- " + f.name + " (" + f.kind.to_string() + ", " +
           (f.required ? "required" : "optional") + "): " + f.description;
    if (f.kind.base == FieldKind::Base::enumeration) {
      out += " [one of:";
      for (const auto& v : f.kind.enum_values) out += " " + v;
      out += "]";
    }
    out.push_back('\n');
  }
  if (!out.empty()) out.pop_back();
  return out;
}

std::string render_prompt(const ExtractionSchema& schema,
                          std::string_view chunk_text) {
  if (chunk_text.empty()) {
    raise(Errc::config, "render_prompt: chunk text is empty");
  }
  check_template(schema.prompt_template);

  std::string docs = render_field_docs(schema);
  const std::string& tmpl = schema.prompt_template;
  std::string out;
  out.reserve(tmpl.size() + chunk_text.size() + docs.size());
  std::size_t cursor = 0;
  for (const auto& ph : find_placeholders(tmpl)) {
    out.append(tmpl, cursor, ph.begin - cursor);
    out += (ph.name == "chunk_text") ? std::string(chunk_text) : docs;
    cursor = ph.end;
  }
  out.append(tmpl, cursor, tmpl.size() - cursor);
  return out;
}

namespace {

bool is_integral_number(const nlohmann::json& v) {
  if (v.is_number_integer() || v.is_number_unsigned()) return true;
  if (v.is_number_float()) {
    double d = v.get<double>();
    return std::floor(d) == d && std::isfinite(d);
  }
  return false;
}

bool parse_numeric_string(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size();
}

// Type-check (and under lenient mode, coerce) one value against a kind.
// Returns false and appends a violation on mismatch.
bool check_value(const FieldKind& kind, int depth, const nlohmann::json& value,
                 Coercion mode, const std::string& path,
                 std::vector<Violation>& violations, nlohmann::json& coerced) {
  if (depth > 0) {
    if (!value.is_array()) {
      violations.push_back({path, "expected a list, got " +
                                      std::string(value.type_name())});
      return false;
    }
    coerced = nlohmann::json::array();
    bool ok = true;
    std::size_t idx = 0;
    for (const auto& item : value) {
      nlohmann::json sub;
      if (check_value(kind, depth - 1, item, mode,
                      path + "[" + std::to_string(idx) + "]", violations, sub)) {
        coerced.push_back(std::move(sub));
      } else {
        ok = false;
      }
      ++idx;
    }
    return ok;
  }

  switch (kind.base) {
    case FieldKind::Base::boolean:
      if (value.is_boolean()) {
        coerced = value;
        return true;
      }
      if (mode == Coercion::lenient && value.is_string()) {
        const auto& s = value.get_ref<const std::string&>();
        if (s == "true" || s == "false") {
          coerced = (s == "true");
          return true;
        }
      }
      violations.push_back({path, "expected boolean, got " +
                                      std::string(value.type_name())});
      return false;

    case FieldKind::Base::integer:
      if (is_integral_number(value)) {
        coerced = value.is_number_float()
                      ? nlohmann::json(static_cast<std::int64_t>(value.get<double>()))
                      : value;
        return true;
      }
      if (mode == Coercion::lenient && value.is_string()) {
        double d;
        if (parse_numeric_string(value.get<std::string>(), d) &&
            std::floor(d) == d) {
          coerced = static_cast<std::int64_t>(d);
          return true;
        }
      }
      violations.push_back({path, "expected integer, got " +
                                      std::string(value.type_name())});
      return false;

    case FieldKind::Base::number:
      if (value.is_number()) {
        coerced = value;
        return true;
      }
      if (mode == Coercion::lenient && value.is_string()) {
        double d;
        if (parse_numeric_string(value.get<std::string>(), d)) {
          coerced = d;
          return true;
        }
      }
      violations.push_back({path, "expected number, got " +
                                      std::string(value.type_name())});
      return false;

    case FieldKind::Base::string:
      if (value.is_string()) {
        coerced = value;
        return true;
      }
      violations.push_back({path, "expected string, got " +
                                      std::string(value.type_name())});
      return false;

    case FieldKind::Base::enumeration: {
      if (!value.is_string()) {
        violations.push_back({path, "expected enum string, got " +
                                        std::string(value.type_name())});
        return false;
      }
      const auto& s = value.get_ref<const std::string&>();
      for (const auto& allowed : kind.enum_values) {
        if (s == allowed) {
          coerced = value;
          return true;
        }
      }
      violations.push_back({path, "value '" + s + "' not in the allowed set"});
      return false;
    }
  }
  return false;
}

bool validate_record_object(const ExtractionSchema& schema,
                            const nlohmann::json& obj, Coercion mode,
                            const std::string& prefix,
                            std::vector<Violation>& violations,
                            nlohmann::json& values) {
  values = nlohmann::json::object();
  bool ok = true;
  for (const auto& field : schema.fields) {
    std::string path = prefix + field.name;
    auto it = obj.find(field.name);
    if (it == obj.end() || it->is_null()) {
      if (field.required) {
        violations.push_back({path, it == obj.end()
                                        ? "missing required field"
                                        : "null for required field"});
        ok = false;
      }
      continue;
    }
    nlohmann::json coerced;
    if (check_value(field.kind, field.kind.list_depth, *it, mode, path,
                    violations, coerced)) {
      values[field.name] = std::move(coerced);
    } else {
      ok = false;
    }
  }
  return ok;
}

}  // namespace

std::string ValidationFailure::summary() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& v : violations) {
    if (!first) out << "; ";
    first = false;
    if (!v.field.empty()) out << v.field << ": ";
    out << v.detail;
  }
  return out.str();
}

ValidationOutcome validate_output(const ExtractionSchema& schema,
                                  std::string_view raw,
                                  std::string_view chunk_id, Coercion mode) {
  ValidationOutcome outcome;
  outcome.failure.raw_text = std::string(raw);

  nlohmann::json body;
  try {
    body = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error& e) {
    outcome.failure.violations.push_back(
        {"", "invalid JSON at byte " + std::to_string(e.byte) + ": " + e.what()});
    return outcome;
  }

  auto make_record = [&](nlohmann::json values) {
    ValidatedRecord rec;
    rec.values = std::move(values);
    rec.chunk_id = std::string(chunk_id);
    rec.schema_digest = schema.digest;
    rec.raw_text = std::string(raw);
    return rec;
  };

  if (schema.container == Container::single_record) {
    if (!body.is_object()) {
      outcome.failure.violations.push_back(
          {"", "expected a JSON object for a single-record schema, got " +
                   std::string(body.type_name())});
      return outcome;
    }
    nlohmann::json values;
    if (validate_record_object(schema, body, mode, "",
                               outcome.failure.violations, values)) {
      outcome.ok = true;
      outcome.records.push_back(make_record(std::move(values)));
    }
    return outcome;
  }

  // list-of-records: a JSON array, one record per element. An empty array is
  // a valid "nothing found" response.
  if (!body.is_array()) {
    outcome.failure.violations.push_back(
        {"", "expected a JSON array for a list-of-records schema, got " +
                 std::string(body.type_name())});
    return outcome;
  }
  std::vector<ValidatedRecord> records;
  bool ok = true;
  std::size_t idx = 0;
  for (const auto& element : body) {
    std::string prefix = "[" + std::to_string(idx) + "].";
    if (!element.is_object()) {
      outcome.failure.violations.push_back(
          {"[" + std::to_string(idx) + "]",
           "expected an object, got " + std::string(element.type_name())});
      ok = false;
    } else {
      nlohmann::json values;
      if (validate_record_object(schema, element, mode, prefix,
                                 outcome.failure.violations, values)) {
        records.push_back(make_record(std::move(values)));
      } else {
        ok = false;
      }
    }
    ++idx;
  }
  if (ok) {
    outcome.ok = true;
    outcome.records = std::move(records);
  }
  return outcome;
}

}  // namespace glean
