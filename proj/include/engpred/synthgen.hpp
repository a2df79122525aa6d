#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "engpred/types.hpp"

namespace engpred::synthgen {

// Synthetic-log generator configuration. Labels are drawn Bernoulli from a
// logistic model: p = sigmoid(logit(base_rate) + sum_f weight_f * x_f) with
// planted features
//   "follower_class"  author follower class scaled to [0,1] (class/7)
//   "affinity"        1 when the reader's preference set contains the author
//   "hot_hashtag"     1 when text_tokens contains hot_token_id
//   "language_match"  1 when tweet language equals the reader's own language
//   "reader_follows"  the reader_follows_author flag
// Unlisted weights default to 0.
struct GenConfig {
  int n_users = 1000;
  int n_tweets = 2000;
  int n_records = 10000;
  int n_hashtags = 200;
  int n_domains = 100;
  int n_languages = 8;
  double english_fraction = 0.4;  // share of tweets in the designated English id
  std::array<double, kNumEngagementTypes> base_rates{0.05, 0.10, 0.02, 0.30};
  std::map<std::string, double> signal_weights;
  double follower_alpha = 2.0;  // discrete power-law exponent, > 1
  std::uint64_t seed = 1;

  // generator internals, all deterministic per seed
  std::uint32_t hot_token_id = 777;
  double hot_token_fraction = 0.1;   // share of tweets carrying the hot token
  int prefs_per_user = 5;            // size of each reader's preference set
  double pref_author_prob = 0.6;     // chance a record's reader is a fan of the author
  std::uint32_t vocab_size = 5000;
  int tokens_min = 8;
  int tokens_max = 24;
  std::int64_t start_timestamp = 1'580'000'000;
  std::int64_t time_span = 14 * 86'400;

  // The language id scored as English downstream.
  static const char* english_language_id() { return "L0"; }

  std::string to_json() const;
  static GenConfig from_json(const std::string& text);

  void validate() const;  // throws UsageError on bad fractions/sizes
};

struct GroundTruth {
  // per record, per engagement type, the true Bernoulli probability
  std::vector<std::array<double, kNumEngagementTypes>> probabilities;
  std::map<std::string, double> coefficients;  // the planted weights, as used
};

struct Generated {
  std::vector<EngagementRecord> records;
  GroundTruth truth;
};

Generated generate(const GenConfig& config);

// Inverse of ingest::parse_line; round-trips exactly.
std::string serialize_record(const EngagementRecord& r);
void write_tsv(const std::vector<EngagementRecord>& records, const std::string& path);

}  // namespace engpred::synthgen
