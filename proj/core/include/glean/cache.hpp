#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "glean/cost.hpp"

namespace glean {

// Entries are immutable once written: re-putting an identical body is a
// no-op, a different body under the same key is a determinism breach and
// raises Errc::conflict.
struct CacheEntry {
  std::string key;  // digest of the canonical ProviderRequest serialization
  std::string body;
  TokenUsage usage;
  std::string created_at;  // ISO 8601 UTC
  std::string schema_digest;
};

struct CacheStats {
  std::int64_t entries = 0;
  std::int64_t hits = 0;    // this process
  std::int64_t misses = 0;  // this process
  std::int64_t bytes = 0;   // stored body bytes
};

class CacheStore {
 public:
  virtual ~CacheStore() = default;

  std::optional<CacheEntry> get(const std::string& key);
  void put(const CacheEntry& entry);
  CacheStats stats();

  virtual void for_each(
      const std::function<void(const CacheEntry&)>& fn) = 0;
  // Removes entries created strictly before the ISO date/time; returns the
  // number removed.
  virtual std::int64_t prune_before(const std::string& iso_timestamp) = 0;

 protected:
  virtual std::optional<CacheEntry> do_get(const std::string& key) = 0;
  virtual void do_put(const CacheEntry& entry) = 0;
  virtual std::int64_t entry_count() = 0;
  virtual std::int64_t byte_count() = 0;

 private:
  std::atomic<std::int64_t> hits_{0};
  std::atomic<std::int64_t> misses_{0};
};

// Backends. sqlite is the default (transactional, write-ahead journal);
// memory backs tests; dir writes one file per entry for debuggability.
std::unique_ptr<CacheStore> open_memory_cache();
std::unique_ptr<CacheStore> open_dir_cache(const std::filesystem::path& dir);
std::unique_ptr<CacheStore> open_sqlite_cache(const std::filesystem::path& file);

// backend in {"sqlite", "memory", "dir"}; the store lives under
// <workspace>/cache/.
std::unique_ptr<CacheStore> open_cache(const std::string& backend,
                                       const std::filesystem::path& cache_dir);

std::string now_iso8601_utc();

}  // namespace glean
