#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace glean {

// A field type: a base kind plus list nesting (depth 0..2).
// Textual forms: "boolean", "integer", "number", "string", "enum",
// "list-of(string)", "list-of(list-of(integer))".
struct FieldKind {
  enum class Base { boolean, integer, number, string, enumeration };

  Base base = Base::string;
  int list_depth = 0;
  std::vector<std::string> enum_values;  // base == enumeration only

  std::string to_string() const;
  static FieldKind parse(const std::string& text);  // throws Errc::schema

  bool operator==(const FieldKind&) const = default;
};

struct FieldSpec {
  std::string name;
  FieldKind kind;
  std::string description;
  bool required = true;

  bool operator==(const FieldSpec&) const = default;
};

enum class Container { single_record, list_of_records };

// The contract every model response must satisfy. Immutable after load;
// safe to share across workers without synchronization.
struct ExtractionSchema {
  std::string schema_name;
  std::vector<FieldSpec> fields;
  Container container = Container::single_record;
  std::string prompt_template;  // placeholders: {chunk_text} (exactly once), {field_docs}
  std::string system_prompt;
  std::string digest;  // sha256 of the canonical serialization

  nlohmann::json to_canonical_json() const;
  std::string serialize() const;  // canonical text form; load_schema round-trips it
};

struct ValidatedRecord {
  nlohmann::json values;  // field name -> typed (coerced) value
  std::string chunk_id;
  std::string schema_digest;
  std::string raw_text;  // verbatim model output
};

struct Violation {
  std::string field;   // empty when the whole body is at fault
  std::string detail;  // includes the byte position for JSON errors
};

// A failed validation is a value, not an abort: the pipeline records it and
// moves on. Every failure names at least one field or the JSON error position.
struct ValidationFailure {
  std::vector<Violation> violations;
  std::string raw_text;

  std::string summary() const;
};

struct ValidationOutcome {
  bool ok = false;
  std::vector<ValidatedRecord> records;  // one per element for list containers
  ValidationFailure failure;
};

// Strict typing is the default: no string->boolean or string->number
// coercion. Lenient mode additionally accepts "true"/"false" and numeric
// strings. Unknown body fields are ignored in both modes.
enum class Coercion { strict, lenient };

ExtractionSchema load_schema(std::string_view spec_text);
ExtractionSchema load_schema_file(const std::filesystem::path& path);

// `- <name> (<kind>, required|optional): <description>`, one line per field,
// in schema order. Fixed format: prompts must be reproducible across runs.
std::string render_field_docs(const ExtractionSchema& schema);

// Pure function of (schema, chunk_text); substitution happens in a single
// pass so placeholder-looking text inside the chunk is never re-expanded.
std::string render_prompt(const ExtractionSchema& schema,
                          std::string_view chunk_text);

ValidationOutcome validate_output(const ExtractionSchema& schema,
                                  std::string_view raw,
                                  std::string_view chunk_id,
                                  Coercion mode = Coercion::strict);

}  // namespace glean
