#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "engpred/feature_block.hpp"
#include "engpred/types.hpp"

namespace engpred::sentiment {

enum class Label : int { Negative = 0, Positive = 1, Missing = 2 };

// Per-tweet polarity verdict. Logits are meaningful only when label is not
// Missing, and then label == argmax(logit_neg, logit_pos) with argmax ties
// resolved to Negative.
struct SentimentFeatures {
  Label label = Label::Missing;
  double logit_neg = 0;
  double logit_pos = 0;

  bool present() const { return label != Label::Missing; }
  bool operator==(const SentimentFeatures&) const = default;
};

// token id -> polarity in [-1, 1]
using Lexicon = std::unordered_map<std::uint64_t, double>;

// Mean polarity s over lexicon-matched token occurrences, logits (-s, +s).
// Records outside english_language_ids score as Missing. s == 0 (including
// no matches) labels Negative.
SentimentFeatures score_lexicon(const EngagementRecord& record,
                                const Lexicon& lexicon,
                                const std::set<std::string>& english_language_ids);

// Deterministic stand-in lexicon: roughly half of the token ids in
// [0, vocab_size) get polarity +1 or -1, chosen by hashing (seed, token).
Lexicon hash_lexicon(std::uint64_t vocab_size, std::uint64_t seed);

// TSV with columns token_id, polarity.
Lexicon load_lexicon(const std::string& path);
void save_lexicon(const std::string& path, const Lexicon& lexicon);

// TSV with columns tweet_id, label(0/1), logit_neg, logit_pos. Rows violating
// the label==argmax invariant are rejected.
std::map<std::string, SentimentFeatures> load_precomputed(const std::string& path);
void save_precomputed(const std::string& path,
                      const std::map<std::string, SentimentFeatures>& scores);

using Provider = std::function<SentimentFeatures(const EngagementRecord&)>;

Provider lexicon_provider(Lexicon lexicon, std::set<std::string> english_language_ids);
// Unknown tweet ids score as Missing.
Provider precomputed_provider(std::map<std::string, SentimentFeatures> scores);

// Columns d3.label, d3.logit_neg, d3.logit_pos; Missing rows get NaN cells.
FeatureBlock sentiment_block(const std::vector<EngagementRecord>& records,
                             const Provider& provider);

}  // namespace engpred::sentiment
