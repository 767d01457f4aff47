#include "glean/errors.hpp"

namespace glean {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::parse: return "parse";
    case Errc::schema: return "schema";
    case Errc::template_error: return "template";
    case Errc::io: return "io";
    case Errc::format: return "format";
    case Errc::config: return "config";
    case Errc::store: return "store";
    case Errc::conflict: return "conflict";
    case Errc::unknown_model: return "unknown-model";
    case Errc::empty_sample: return "empty-sample";
    case Errc::alignment: return "alignment";
    case Errc::degenerate_variance: return "degenerate-variance";
    case Errc::degenerate_points: return "degenerate-points";
    case Errc::all_zero_costs: return "all-zero-costs";
    case Errc::duplicate_provider: return "duplicate-provider";
    case Errc::unknown_provider: return "unknown-provider";
    case Errc::transport: return "transport";
    case Errc::non_retryable: return "non-retryable";
    case Errc::exhausted_retries: return "exhausted-retries";
    case Errc::script_miss: return "script-miss";
    case Errc::digest_mismatch: return "digest-mismatch";
    case Errc::missing_checkpoint: return "missing-checkpoint";
    case Errc::incomplete_run: return "incomplete-run";
    case Errc::dataset_too_small: return "dataset-too-small";
    case Errc::optimizer_failure: return "optimizer-failure";
    case Errc::type_mismatch: return "type-mismatch";
    case Errc::internal: return "internal";
  }
  return "unknown";
}

}  // namespace glean
