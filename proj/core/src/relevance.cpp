#include "glean/relevance.hpp"

#include <algorithm>
#include <set>

#include "glean/errors.hpp"
#include "glean/text.hpp"

namespace glean {

void KeywordSet::validate() const {
  std::set<std::string> seen;
  for (const auto& kw : keywords) {
    if (kw.empty()) {
      raise(Errc::config, "keyword set contains an empty keyword");
    }
    if (kw != ascii_fold(kw)) {
      raise(Errc::config, "keywords must be lowercase: '" + kw + "'");
    }
    if (!seen.insert(kw).second) {
      raise(Errc::config, "duplicate keyword: '" + kw + "'");
    }
  }
  if (fuzzy_threshold &&
      (*fuzzy_threshold <= 0.0 || *fuzzy_threshold > 1.0)) {
    raise(Errc::config, "fuzzy_threshold must lie in (0,1]");
  }
}

double score_keyword(const Chunk& chunk, const KeywordSet& ks) {
  if (ks.keywords.empty()) return 0.0;
  if (ks.match_mode == MatchMode::substring) {
    std::string folded = ascii_fold(chunk.text);
    for (const auto& kw : ks.keywords) {
      if (folded.find(kw) != std::string::npos) return 1.0;
    }
    return 0.0;
  }
  std::vector<std::string> tokens = tokenize(chunk.text);
  for (const auto& kw : ks.keywords) {
    if (std::find(tokens.begin(), tokens.end(), kw) != tokens.end()) {
      return 1.0;
    }
  }
  return 0.0;
}

double score_fuzzy(const Chunk& chunk, const KeywordSet& ks) {
  if (!ks.fuzzy_threshold) {
    raise(Errc::config, "fuzzy scoring needs fuzzy_threshold set");
  }
  if (ks.keywords.empty()) return 0.0;
  std::vector<std::string> tokens = tokenize(chunk.text);
  double best = 0.0;
  for (const auto& kw : ks.keywords) {
    std::size_t kw_len = codepoint_count(kw);
    for (const auto& token : tokens) {
      std::size_t max_len = std::max(kw_len, codepoint_count(token));
      if (max_len == 0) continue;
      double sim = 1.0 - static_cast<double>(levenshtein(kw, token)) /
                             static_cast<double>(max_len);
      best = std::max(best, sim);
      if (best == 1.0) return best;
    }
  }
  return best;
}

FilterResult filter_chunks(const std::vector<Chunk>& chunks,
                           const ChunkScorer& scorer, double cutoff) {
  if (cutoff < 0.0 || cutoff > 1.0) {
    raise(Errc::config, "filter cutoff must lie in [0,1]");
  }
  FilterResult result;
  for (const auto& chunk : chunks) {
    double score = scorer(chunk);
    if (score >= cutoff) {
      Chunk kept = chunk;
      kept.relevance_score = score;
      result.kept.push_back(std::move(kept));
    } else {
      ++result.dropped_count;
    }
  }
  return result;
}

ChunkScorer keyword_scorer(KeywordSet ks) {
  ks.validate();
  return [ks = std::move(ks)](const Chunk& chunk) {
    return score_keyword(chunk, ks);
  };
}

ChunkScorer fuzzy_scorer(KeywordSet ks) {
  ks.validate();
  return [ks = std::move(ks)](const Chunk& chunk) {
    return score_fuzzy(chunk, ks);
  };
}

}  // namespace glean
