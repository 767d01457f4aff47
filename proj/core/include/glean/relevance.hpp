#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "glean/ingest.hpp"

namespace glean {

enum class MatchMode { exact_token, substring };

struct KeywordSet {
  std::vector<std::string> keywords;  // non-empty, lowercase, no duplicates
  MatchMode match_mode = MatchMode::exact_token;
  std::optional<double> fuzzy_threshold;  // in (0,1]; present iff fuzzy scoring

  void validate() const;  // throws Errc::config
};

// 1 if any keyword matches the case-folded chunk text per match_mode, else 0.
// exact_token splits on non-alphanumeric boundaries; substring is a plain
// case-folded find.
double score_keyword(const Chunk& chunk, const KeywordSet& ks);

// Max over (keyword, chunk token) pairs of 1 - editdistance/max(len).
double score_fuzzy(const Chunk& chunk, const KeywordSet& ks);

using ChunkScorer = std::function<double(const Chunk&)>;

struct FilterResult {
  std::vector<Chunk> kept;  // original order, relevance_score filled in
  std::size_t dropped_count = 0;
};

// kept = chunks with score >= cutoff. Order preserved, no duplication.
FilterResult filter_chunks(const std::vector<Chunk>& chunks,
                           const ChunkScorer& scorer, double cutoff);

ChunkScorer keyword_scorer(KeywordSet ks);
ChunkScorer fuzzy_scorer(KeywordSet ks);

}  // namespace glean
