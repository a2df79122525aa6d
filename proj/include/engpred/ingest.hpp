#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "engpred/types.hpp"

namespace engpred::ingest {

// Canonical engagement-log TSV: UTF-8, '\t' separated, '\n' terminated, no
// header, 23 columns:
//   1 text_tokens  2 hashtags  3 tweet_id  4 present_media  5 present_domains
//   6 tweet_type  7 language  8 tweet_timestamp
//   9..13  author: user_id, follower_count, following_count, is_verified,
//          account_creation
//  14..18  reader: same five fields
//  19 reader_follows_author  20 reply_ts  21 retweet_ts  22 quote_ts  23 like_ts
// List fields are '|'-separated; an empty field is an empty list or an absent
// timestamp. Booleans are "true"/"false".
inline constexpr int kTsvFieldCount = 23;

struct ParseOptions {
  bool strict = true;  // strict: throw on first malformed line; lenient: skip it
};

struct ParseStats {
  std::size_t lines_read = 0;
  std::size_t records = 0;
  std::size_t skipped = 0;       // lenient mode only
  std::string first_error;       // message of the first skipped line
};

// Streaming reader; yields records in file order.
class TsvReader {
 public:
  TsvReader(const std::string& path, ParseOptions opts = {});
  ~TsvReader();
  TsvReader(TsvReader&&) noexcept;
  TsvReader& operator=(TsvReader&&) noexcept;

  // False at end of input. Throws ParseError in strict mode.
  bool next(EngagementRecord& out);

  const ParseStats& stats() const { return stats_; }

 private:
  std::unique_ptr<std::ifstream> in_;
  ParseOptions opts_;
  ParseStats stats_;
};

std::vector<EngagementRecord> parse_tsv(const std::string& path, ParseOptions opts = {},
                                        ParseStats* stats = nullptr);

// Parses one 23-field line. line_no is for error messages only.
EngagementRecord parse_line(const std::string& line, std::size_t line_no);

enum class SplitMode { Random, Chronological };

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
};

// Random mode: each record goes to train with probability `ratio`
// (seeded, deterministic). Chronological: sort by tweet_timestamp ascending,
// first ceil(ratio*n) records are train. Index lists preserve input order in
// random mode and timestamp order in chronological mode.
SplitIndices split_indices(const std::vector<EngagementRecord>& records, double ratio,
                           SplitMode mode, std::uint64_t seed);

std::pair<std::vector<EngagementRecord>, std::vector<EngagementRecord>> split(
    const std::vector<EngagementRecord>& records, double ratio, SplitMode mode,
    std::uint64_t seed);

struct StatsReport {
  std::size_t n = 0;
  std::array<std::size_t, kNumEngagementTypes> engagement_counts{};
  std::array<double, kNumEngagementTypes> positive_rates{};
  std::map<std::string, std::size_t> language_histogram;

  std::string to_json() const;
  std::string render() const;
};

StatsReport dataset_stats(const std::vector<EngagementRecord>& records);

}  // namespace engpred::ingest
