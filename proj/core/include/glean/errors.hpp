#pragma once

#include <stdexcept>
#include <string>

namespace glean {

// Every recoverable failure in the toolkit maps to one of these classes.
// CLI exit codes and retry classification key off the code, not the message.
enum class Errc {
  parse,              // malformed config/schema/json text
  schema,             // structurally invalid schema (dup field, empty enum, ...)
  template_error,     // unknown placeholder / placeholder arity
  io,                 // file not found, unreadable
  format,             // undecodable input, missing column
  config,             // semantically invalid run configuration
  store,              // cache backing store corrupt or unusable
  conflict,           // cache re-put with a different body
  unknown_model,      // pricing lookup miss
  empty_sample,       // population scaling with zero sample
  alignment,          // prediction/reference id mismatch
  degenerate_variance,
  degenerate_points,
  all_zero_costs,
  duplicate_provider,
  unknown_provider,
  transport,          // network-level failure
  non_retryable,      // auth / invalid request
  exhausted_retries,
  script_miss,        // mock provider has no rule for the request
  digest_mismatch,    // resume config drift
  missing_checkpoint,
  incomplete_run,
  dataset_too_small,
  optimizer_failure,
  type_mismatch,
  internal,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, std::string message) {
  throw Error(code, std::move(message));
}

}  // namespace glean
