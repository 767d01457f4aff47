#include <sqlite3.h>

#include <mutex>

#include "glean/cache.hpp"
#include "glean/digest.hpp"
#include "glean/errors.hpp"

namespace glean {

namespace {

class Statement {
 public:
  Statement(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      raise(Errc::store, std::string("sqlite prepare failed: ") +
                             sqlite3_errmsg(db));
    }
  }
  ~Statement() { sqlite3_finalize(stmt_); }

  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  void bind_text(int idx, const std::string& value) {
    sqlite3_bind_text(stmt_, idx, value.data(),
                      static_cast<int>(value.size()), SQLITE_TRANSIENT);
  }
  void bind_int64(int idx, std::int64_t value) {
    sqlite3_bind_int64(stmt_, idx, value);
  }

  bool step_row() {
    int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    raise(Errc::store, std::string("sqlite step failed: ") + sqlite3_errmsg(db_));
  }

  std::string column_text(int idx) {
    const unsigned char* p = sqlite3_column_text(stmt_, idx);
    int n = sqlite3_column_bytes(stmt_, idx);
    return p == nullptr ? std::string() : std::string(reinterpret_cast<const char*>(p),
                                                      static_cast<std::size_t>(n));
  }
  std::int64_t column_int64(int idx) { return sqlite3_column_int64(stmt_, idx); }

  sqlite3_stmt* get() { return stmt_; }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

class SqliteCache final : public CacheStore {
 public:
  explicit SqliteCache(const std::filesystem::path& file) {
    std::error_code ec;
    if (file.has_parent_path()) {
      std::filesystem::create_directories(file.parent_path(), ec);
    }
    if (sqlite3_open_v2(file.string().c_str(), &db_,
                        SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE |
                            SQLITE_OPEN_FULLMUTEX,
                        nullptr) != SQLITE_OK) {
      std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
      if (db_) sqlite3_close(db_);
      db_ = nullptr;
      raise(Errc::store, "cannot open cache store " + file.string() + ": " + msg);
    }
    exec("PRAGMA journal_mode=WAL");
    exec("PRAGMA synchronous=NORMAL");
    exec(
        "CREATE TABLE IF NOT EXISTS meta (k TEXT PRIMARY KEY, v TEXT NOT "
        "NULL)");
    exec(
        "CREATE TABLE IF NOT EXISTS entries ("
        " key TEXT PRIMARY KEY,"
        " body TEXT NOT NULL,"
        " input_tokens INTEGER NOT NULL,"
        " output_tokens INTEGER NOT NULL,"
        " estimated INTEGER NOT NULL,"
        " created_at TEXT NOT NULL,"
        " schema_digest TEXT NOT NULL)");
    check_header();
  }

  ~SqliteCache() override {
    if (db_ != nullptr) sqlite3_close(db_);
  }

  void for_each(const std::function<void(const CacheEntry&)>& fn) override {
    std::lock_guard lock(mu_);
    Statement stmt(db_,
                   "SELECT key, body, input_tokens, output_tokens, estimated,"
                   " created_at, schema_digest FROM entries ORDER BY key");
    while (stmt.step_row()) {
      fn(row_to_entry(stmt));
    }
  }

  std::int64_t prune_before(const std::string& cutoff) override {
    std::lock_guard lock(mu_);
    Statement stmt(db_, "DELETE FROM entries WHERE created_at < ?1");
    stmt.bind_text(1, cutoff);
    stmt.step_row();
    return sqlite3_changes64(db_);
  }

 protected:
  std::optional<CacheEntry> do_get(const std::string& key) override {
    std::lock_guard lock(mu_);
    Statement stmt(db_,
                   "SELECT key, body, input_tokens, output_tokens, estimated,"
                   " created_at, schema_digest FROM entries WHERE key = ?1");
    stmt.bind_text(1, key);
    if (!stmt.step_row()) return std::nullopt;
    return row_to_entry(stmt);
  }

  void do_put(const CacheEntry& entry) override {
    std::lock_guard lock(mu_);
    Statement stmt(db_,
                   "INSERT OR IGNORE INTO entries (key, body, input_tokens,"
                   " output_tokens, estimated, created_at, schema_digest)"
                   " VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)");
    stmt.bind_text(1, entry.key);
    stmt.bind_text(2, entry.body);
    stmt.bind_int64(3, entry.usage.input_tokens);
    stmt.bind_int64(4, entry.usage.output_tokens);
    stmt.bind_int64(5, entry.usage.estimated ? 1 : 0);
    stmt.bind_text(6, entry.created_at);
    stmt.bind_text(7, entry.schema_digest);
    stmt.step_row();
  }

  std::int64_t entry_count() override {
    std::lock_guard lock(mu_);
    Statement stmt(db_, "SELECT COUNT(*) FROM entries");
    stmt.step_row();
    return stmt.column_int64(0);
  }

  std::int64_t byte_count() override {
    std::lock_guard lock(mu_);
    Statement stmt(db_, "SELECT COALESCE(SUM(LENGTH(CAST(body AS BLOB))),0)"
                        " FROM entries");
    stmt.step_row();
    return stmt.column_int64(0);
  }

 private:
  void exec(const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err != nullptr ? err : "unknown sqlite error";
      sqlite3_free(err);
      raise(Errc::store, "sqlite error: " + msg);
    }
  }

  void check_header() {
    Statement get(db_, "SELECT v FROM meta WHERE k = 'hash_algorithm'");
    if (get.step_row()) {
      if (get.column_text(0) != kDigestAlgorithm) {
        raise(Errc::store,
              "cache store uses hash algorithm '" + get.column_text(0) +
                  "', this build expects '" + kDigestAlgorithm + "'");
      }
      return;
    }
    Statement put(db_,
                  "INSERT OR IGNORE INTO meta (k, v) VALUES"
                  " ('hash_algorithm', ?1), ('format', 'glean-cache'),"
                  " ('version', '1')");
    put.bind_text(1, kDigestAlgorithm);
    put.step_row();
  }

  static CacheEntry row_to_entry(Statement& stmt) {
    CacheEntry e;
    e.key = stmt.column_text(0);
    e.body = stmt.column_text(1);
    e.usage.input_tokens = stmt.column_int64(2);
    e.usage.output_tokens = stmt.column_int64(3);
    e.usage.estimated = stmt.column_int64(4) != 0;
    e.created_at = stmt.column_text(5);
    e.schema_digest = stmt.column_text(6);
    return e;
  }

  std::mutex mu_;
  sqlite3* db_ = nullptr;
};

}  // namespace

std::unique_ptr<CacheStore> open_sqlite_cache(const std::filesystem::path& file) {
  return std::make_unique<SqliteCache>(file);
}

}  // namespace glean
