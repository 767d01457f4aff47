#include "glean/cache.hpp"

#include <ctime>
#include <map>
#include <mutex>

#include <nlohmann/json.hpp>

#include "glean/digest.hpp"
#include "glean/errors.hpp"
#include "glean/fs.hpp"

namespace glean {

namespace fsys = std::filesystem;

std::string now_iso8601_utc() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::optional<CacheEntry> CacheStore::get(const std::string& key) {
  auto entry = do_get(key);
  if (entry) {
    hits_.fetch_add(1);
  } else {
    misses_.fetch_add(1);
  }
  return entry;
}

void CacheStore::put(const CacheEntry& entry) {
  auto existing = do_get(entry.key);
  if (existing) {
    if (existing->body == entry.body) return;  // idempotent re-put
    raise(Errc::conflict, "cache key " + entry.key.substr(0, 12) +
                              "… already holds a different body");
  }
  do_put(entry);
}

CacheStats CacheStore::stats() {
  CacheStats s;
  s.entries = entry_count();
  s.bytes = byte_count();
  s.hits = hits_.load();
  s.misses = misses_.load();
  return s;
}

namespace {

nlohmann::json entry_to_json(const CacheEntry& e) {
  return nlohmann::json{{"key", e.key},
                        {"body", e.body},
                        {"input_tokens", e.usage.input_tokens},
                        {"output_tokens", e.usage.output_tokens},
                        {"estimated", e.usage.estimated},
                        {"created_at", e.created_at},
                        {"schema_digest", e.schema_digest}};
}

CacheEntry entry_from_json(const nlohmann::json& j) {
  CacheEntry e;
  e.key = j.at("key").get<std::string>();
  e.body = j.at("body").get<std::string>();
  e.usage.input_tokens = j.at("input_tokens").get<std::int64_t>();
  e.usage.output_tokens = j.at("output_tokens").get<std::int64_t>();
  e.usage.estimated = j.at("estimated").get<bool>();
  e.created_at = j.at("created_at").get<std::string>();
  e.schema_digest = j.value("schema_digest", std::string());
  return e;
}

// ---------------------------------------------------------------------------

class MemoryCache final : public CacheStore {
 public:
  void for_each(const std::function<void(const CacheEntry&)>& fn) override {
    std::lock_guard lock(mu_);
    for (const auto& [key, entry] : entries_) fn(entry);
  }

  std::int64_t prune_before(const std::string& cutoff) override {
    std::lock_guard lock(mu_);
    std::int64_t removed = 0;
    for (auto it = entries_.begin(); it != entries_.end();) {
      if (it->second.created_at < cutoff) {
        bytes_ -= static_cast<std::int64_t>(it->second.body.size());
        it = entries_.erase(it);
        ++removed;
      } else {
        ++it;
      }
    }
    return removed;
  }

 protected:
  std::optional<CacheEntry> do_get(const std::string& key) override {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void do_put(const CacheEntry& entry) override {
    std::lock_guard lock(mu_);
    auto [it, inserted] = entries_.emplace(entry.key, entry);
    if (inserted) bytes_ += static_cast<std::int64_t>(entry.body.size());
  }

  std::int64_t entry_count() override {
    std::lock_guard lock(mu_);
    return static_cast<std::int64_t>(entries_.size());
  }

  std::int64_t byte_count() override {
    std::lock_guard lock(mu_);
    return bytes_;
  }

 private:
  std::mutex mu_;
  std::map<std::string, CacheEntry> entries_;
  std::int64_t bytes_ = 0;
};

// ---------------------------------------------------------------------------
// One JSON file per entry, named by key, written atomically. The _meta.json
// header pins the digest algorithm so a future change cannot silently mix
// keys from two algorithms in one store.

class DirCache final : public CacheStore {
 public:
  explicit DirCache(fsys::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fsys::create_directories(dir_, ec);
    fsys::path meta = dir_ / "_meta.json";
    if (fsys::exists(meta)) {
      auto doc = nlohmann::json::parse(read_file(meta), nullptr, false);
      if (doc.is_discarded() ||
          doc.value("hash_algorithm", "") != kDigestAlgorithm) {
        raise(Errc::store, "cache store at " + dir_.string() +
                               " uses an unknown hash algorithm");
      }
    } else {
      write_file_atomic(meta, nlohmann::json{{"format", "glean-cache-dir"},
                                             {"version", 1},
                                             {"hash_algorithm",
                                              kDigestAlgorithm}}
                                  .dump());
    }
  }

  void for_each(const std::function<void(const CacheEntry&)>& fn) override {
    std::lock_guard lock(mu_);
    for (const auto& file : entry_files()) {
      fn(load_entry(file));
    }
  }

  std::int64_t prune_before(const std::string& cutoff) override {
    std::lock_guard lock(mu_);
    std::int64_t removed = 0;
    for (const auto& file : entry_files()) {
      if (load_entry(file).created_at < cutoff) {
        fsys::remove(file);
        ++removed;
      }
    }
    return removed;
  }

 protected:
  std::optional<CacheEntry> do_get(const std::string& key) override {
    std::lock_guard lock(mu_);
    fsys::path file = path_for(key);
    if (!fsys::exists(file)) return std::nullopt;
    return load_entry(file);
  }

  void do_put(const CacheEntry& entry) override {
    std::lock_guard lock(mu_);
    write_file_atomic(path_for(entry.key), entry_to_json(entry).dump());
  }

  std::int64_t entry_count() override {
    std::lock_guard lock(mu_);
    return static_cast<std::int64_t>(entry_files().size());
  }

  std::int64_t byte_count() override {
    std::lock_guard lock(mu_);
    std::int64_t bytes = 0;
    for (const auto& file : entry_files()) {
      bytes += static_cast<std::int64_t>(load_entry(file).body.size());
    }
    return bytes;
  }

 private:
  fsys::path path_for(const std::string& key) const {
    return dir_ / (key + ".json");
  }

  std::vector<fsys::path> entry_files() const {
    std::vector<fsys::path> files;
    for (const auto& e : fsys::directory_iterator(dir_)) {
      if (e.is_regular_file() && e.path().extension() == ".json" &&
          e.path().filename() != "_meta.json") {
        files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
    return files;
  }

  CacheEntry load_entry(const fsys::path& file) const {
    auto doc = nlohmann::json::parse(read_file(file), nullptr, false);
    if (doc.is_discarded()) {
      raise(Errc::store, "corrupt cache entry: " + file.string());
    }
    return entry_from_json(doc);
  }

  std::mutex mu_;
  fsys::path dir_;
};

}  // namespace

std::unique_ptr<CacheStore> open_memory_cache() {
  return std::make_unique<MemoryCache>();
}

std::unique_ptr<CacheStore> open_dir_cache(const fsys::path& dir) {
  return std::make_unique<DirCache>(dir);
}

std::unique_ptr<CacheStore> open_cache(const std::string& backend,
                                       const fsys::path& cache_dir) {
  if (backend == "memory") return open_memory_cache();
  if (backend == "dir") return open_dir_cache(cache_dir / "entries");
  if (backend == "sqlite") return open_sqlite_cache(cache_dir / "cache.sqlite");
  raise(Errc::config, "unknown cache backend: '" + backend + "'");
}

}  // namespace glean
