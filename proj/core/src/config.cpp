#include "glean/config.hpp"

#include "glean/canonical.hpp"
#include "glean/digest.hpp"
#include "glean/errors.hpp"
#include "glean/fs.hpp"
#include "glean/structured.hpp"

namespace glean {

namespace fsys = std::filesystem;

ChunkScorer RelevanceConfig::make_scorer() const {
  KeywordSet ks;
  ks.keywords = keywords;
  if (mode == "fuzzy") {
    ks.fuzzy_threshold = fuzzy_threshold.value_or(0.8);
    return fuzzy_scorer(std::move(ks));
  }
  if (mode == "substring") {
    ks.match_mode = MatchMode::substring;
  } else if (mode == "exact_token") {
    ks.match_mode = MatchMode::exact_token;
  } else {
    raise(Errc::config, "relevance mode must be exact_token, substring or fuzzy");
  }
  return keyword_scorer(std::move(ks));
}

MockScript MockConfig::to_script() const {
  MockScript script;
  script.rules = rules;
  script.default_body = default_body;
  script.fail_first = fail_first;
  script.fail_class = parse_failure_class(fail_class);
  return script;
}

namespace {

fsys::path resolve(const fsys::path& base, const std::string& p) {
  fsys::path path(p);
  if (!path.is_absolute()) path = base / path;
  // Snapshots must survive a change of working directory.
  return fsys::absolute(path).lexically_normal();
}

SplitStrategy split_from_json(const nlohmann::json& doc) {
  std::string name = doc.value("strategy", std::string("paragraph"));
  if (name == "paragraph") return SplitStrategy::paragraph();
  if (name == "whole_document") return SplitStrategy::whole_document();
  if (name == "fixed_window") {
    if (!doc.contains("window_size")) {
      raise(Errc::config, "fixed_window split needs window_size");
    }
    return SplitStrategy::fixed_window(doc["window_size"].get<std::size_t>(),
                                       doc.value("overlap", std::size_t{0}));
  }
  raise(Errc::config, "unknown split strategy: '" + name + "'");
}

nlohmann::json split_to_json(const SplitStrategy& s) {
  switch (s.kind) {
    case SplitStrategy::Kind::paragraph:
      return {{"strategy", "paragraph"}};
    case SplitStrategy::Kind::whole_document:
      return {{"strategy", "whole_document"}};
    case SplitStrategy::Kind::fixed_window:
      return {{"strategy", "fixed_window"},
              {"window_size", s.window_size},
              {"overlap", s.overlap}};
  }
  return {{"strategy", "paragraph"}};
}

Currency currency_from(const nlohmann::json& v, const char* what) {
  if (v.is_string()) return Currency::parse(v.get<std::string>());
  if (v.is_number()) return Currency::from_double(v.get<double>());
  raise(Errc::config, std::string(what) + " must be a decimal string or number");
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  nlohmann::json doc;
  doc["workspace"] = workspace.string();
  doc["seed"] = seed;
  doc["data"] = {{"source", data_source.string()},
                 {"format", input_format_name(format)}};
  if (!text_column.empty()) doc["data"]["text_column"] = text_column;
  doc["split"] = split_to_json(split_strategy);
  if (relevance.enabled()) {
    nlohmann::json rel{{"keywords", relevance.keywords},
                       {"mode", relevance.mode},
                       {"cutoff", relevance.cutoff}};
    if (relevance.fuzzy_threshold) {
      rel["fuzzy_threshold"] = *relevance.fuzzy_threshold;
    }
    doc["relevance"] = std::move(rel);
  }
  doc["schema"] = schema_path.string();
  nlohmann::json provider{{"provider_id", provider_id},
                          {"model_id", model_id},
                          {"temperature", params.temperature},
                          {"max_output_tokens", params.max_output_tokens}};
  if (params.seed) provider["seed"] = *params.seed;
  doc["provider"] = std::move(provider);
  doc["lenient_coercion"] = lenient_coercion;
  doc["retry"] = {{"max_attempts", retry.max_attempts},
                  {"base_delay_ms", retry.base_delay.count()},
                  {"factor", retry.factor},
                  {"jitter_fraction", retry.jitter_fraction}};
  doc["cache"] = {{"enabled", cache_enabled}, {"backend", cache_backend}};
  if (budget) doc["budget"] = budget->str();
  doc["batch_size"] = batch_size;
  doc["concurrency"] = concurrency;
  doc["pricing"] = pricing_json;
  doc["cost_sample_size"] = cost_sample_size;
  if (!labels_path.empty()) doc["labels"] = labels_path.string();
  if (!target_field.empty()) doc["target_field"] = target_field;
  doc["train_fraction"] = train_fraction;
  if (mock) {
    nlohmann::json rules = nlohmann::json::array();
    for (const auto& r : mock->rules) {
      rules.push_back({{"pattern", r.pattern}, {"body", r.body}});
    }
    nlohmann::json m{{"rules", std::move(rules)}};
    if (mock->default_body) m["default_body"] = *mock->default_body;
    if (mock->fail_first > 0) {
      m["fail_first"] = mock->fail_first;
      m["fail_class"] = mock->fail_class;
    }
    doc["mock"] = std::move(m);
  }
  if (!http_profiles.empty()) doc["providers"] = http_profiles;
  return doc;
}

RunConfig RunConfig::from_json(const nlohmann::json& doc,
                               const fsys::path& base_dir) {
  if (!doc.is_object()) {
    raise(Errc::config, "run config: top level must be a mapping");
  }
  RunConfig cfg;
  cfg.workspace = resolve(base_dir, doc.value("workspace", std::string("workspace")));
  cfg.seed = doc.value("seed", std::uint64_t{0});

  if (!doc.contains("data") || !doc["data"].is_object() ||
      !doc["data"].contains("source")) {
    raise(Errc::config, "run config: missing data.source");
  }
  cfg.data_source = resolve(base_dir, doc["data"]["source"].get<std::string>());
  cfg.format = parse_input_format(doc["data"].value("format", std::string("txt")));
  cfg.text_column = doc["data"].value("text_column", std::string());

  if (doc.contains("split")) cfg.split_strategy = split_from_json(doc["split"]);

  if (doc.contains("relevance") && !doc["relevance"].is_null()) {
    const auto& rel = doc["relevance"];
    if (rel.contains("keywords")) {
      for (const auto& kw : rel["keywords"]) {
        cfg.relevance.keywords.push_back(kw.get<std::string>());
      }
    }
    cfg.relevance.mode = rel.value("mode", std::string("exact_token"));
    cfg.relevance.cutoff = rel.value("cutoff", 0.5);
    if (rel.contains("fuzzy_threshold")) {
      cfg.relevance.fuzzy_threshold = rel["fuzzy_threshold"].get<double>();
    }
    if (cfg.relevance.enabled()) {
      cfg.relevance.make_scorer();  // validates keywords and mode up front
    }
  }

  if (!doc.contains("schema")) {
    raise(Errc::config, "run config: missing schema path");
  }
  cfg.schema_path = resolve(base_dir, doc["schema"].get<std::string>());
  cfg.schema_digest = cfg.load_schema().digest;

  if (doc.contains("provider")) {
    const auto& p = doc["provider"];
    cfg.provider_id = p.value("provider_id", std::string("mock"));
    cfg.model_id = p.value("model_id", std::string());
    cfg.params.temperature = p.value("temperature", 0.0);
    cfg.params.max_output_tokens =
        p.value("max_output_tokens", std::int64_t{256});
    if (p.contains("seed")) cfg.params.seed = p["seed"].get<std::int64_t>();
  }
  if (cfg.model_id.empty()) {
    raise(Errc::config, "run config: provider.model_id is required");
  }
  cfg.lenient_coercion = doc.value("lenient_coercion", false);

  if (doc.contains("retry")) {
    const auto& r = doc["retry"];
    cfg.retry.max_attempts = r.value("max_attempts", 5);
    cfg.retry.base_delay =
        std::chrono::milliseconds(r.value("base_delay_ms", std::int64_t{1000}));
    cfg.retry.factor = r.value("factor", 2.0);
    cfg.retry.jitter_fraction = r.value("jitter_fraction", 0.2);
  }
  cfg.retry.validate();

  if (doc.contains("cache")) {
    cfg.cache_enabled = doc["cache"].value("enabled", true);
    cfg.cache_backend = doc["cache"].value("backend", std::string("sqlite"));
  }

  if (doc.contains("budget") && !doc["budget"].is_null()) {
    cfg.budget = currency_from(doc["budget"], "budget");
  }
  cfg.batch_size = doc.value("batch_size", 16);
  cfg.concurrency = doc.value("concurrency", 8);
  if (cfg.batch_size < 1 || cfg.concurrency < 1) {
    raise(Errc::config, "batch_size and concurrency must be >= 1");
  }
  cfg.cost_sample_size = doc.value("cost_sample_size", 20);

  if (doc.contains("pricing")) {
    if (doc["pricing"].is_string()) {
      fsys::path p = resolve(base_dir, doc["pricing"].get<std::string>());
      cfg.pricing_json = parse_structured_text(read_file(p), p.string());
    } else {
      cfg.pricing_json = doc["pricing"];
    }
    PricingTable::from_json(cfg.pricing_json);  // validate eagerly
  } else {
    cfg.pricing_json = nlohmann::json::object();
  }

  if (doc.contains("labels")) {
    cfg.labels_path = resolve(base_dir, doc["labels"].get<std::string>());
  }
  cfg.target_field = doc.value("target_field", std::string());
  cfg.train_fraction = doc.value("train_fraction", 0.8);

  if (doc.contains("mock")) {
    MockConfig mc;
    const auto& m = doc["mock"];
    if (m.contains("rules")) {
      for (const auto& r : m["rules"]) {
        mc.rules.push_back({r.at("pattern").get<std::string>(),
                            r.at("body").get<std::string>()});
      }
    }
    if (m.contains("default_body")) {
      mc.default_body = m["default_body"].get<std::string>();
    }
    mc.fail_first = m.value("fail_first", 0);
    mc.fail_class = m.value("fail_class", std::string("rate-limit"));
    parse_failure_class(mc.fail_class);  // validate
    cfg.mock = std::move(mc);
  }

  if (doc.contains("providers")) {
    for (const auto& p : doc["providers"]) {
      HttpProviderProfile::from_json(p);  // validate
      cfg.http_profiles.push_back(p);
    }
  }
  return cfg;
}

RunConfig RunConfig::load_file(const fsys::path& path) {
  nlohmann::json doc = parse_structured_text(read_file(path), path.string());
  fsys::path base = path.has_parent_path() ? path.parent_path() : fsys::path(".");
  return from_json(doc, base);
}

nlohmann::json RunConfig::identity_json() const {
  nlohmann::json doc;
  doc["data"] = {{"source", data_source.string()},
                 {"format", input_format_name(format)},
                 {"text_column", text_column}};
  doc["split"] = split_to_json(split_strategy);
  if (relevance.enabled()) {
    doc["relevance"] = {{"keywords", relevance.keywords},
                        {"mode", relevance.mode},
                        {"cutoff", relevance.cutoff}};
    if (relevance.fuzzy_threshold) {
      doc["relevance"]["fuzzy_threshold"] = *relevance.fuzzy_threshold;
    }
  }
  doc["schema_digest"] = schema_digest;
  doc["provider"] = {{"provider_id", provider_id},
                     {"model_id", model_id},
                     {"temperature", params.temperature},
                     {"max_output_tokens", params.max_output_tokens}};
  if (params.seed) doc["provider"]["seed"] = *params.seed;
  doc["lenient_coercion"] = lenient_coercion;
  doc["seed"] = seed;
  doc["pricing"] = pricing_json;
  if (mock) {
    nlohmann::json rules = nlohmann::json::array();
    for (const auto& r : mock->rules) {
      rules.push_back({{"pattern", r.pattern}, {"body", r.body}});
    }
    doc["mock"] = {{"rules", std::move(rules)}};
    if (mock->default_body) doc["mock"]["default_body"] = *mock->default_body;
  }
  if (!http_profiles.empty()) doc["providers"] = http_profiles;
  return doc;
}

std::string RunConfig::identity_digest() const {
  return sha256_hex(canonical_json(identity_json()));
}

ExtractionSchema RunConfig::load_schema() const {
  return load_schema_file(schema_path);
}

}  // namespace glean
