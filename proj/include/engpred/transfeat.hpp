#pragma once

#include <vector>

#include "engpred/feature_block.hpp"
#include "engpred/types.hpp"

namespace engpred::transfeat {

struct AugmentOptions {
  // Appends four per-engagement-type reader->author pair counters after the
  // fixed 28 columns.
  bool per_type_pair_counts = false;
};

// Point-in-time counters plus raw transactional features, rows aligned to the
// input order. A counter reflects only engagement events whose own timestamp
// is strictly earlier than the record's tweet_timestamp; a (reader, tweet)
// pair contributes at most one event per engagement type, at its earliest
// timestamp. Fixed column layout (all prefixed "d1."):
//   0..3   reader_{reply,retweet,quote,like}_count
//   4..7   author_recv_{reply,retweet,quote,like}_count
//   8      pair_count (reader engaged this author, any type)
//   9..12  author/reader follower and following counts
//   13..14 author/reader verified flags
//   15..16 author/reader account age in days at tweet_timestamp
//   17..20 tweet type one-hot (toplevel, quote, retweet, reply)
//   21..23 media presence flags (photo, video, gif)
//   24     language category code
//   25..26 hashtag and domain counts
//   27     reader_follows_author
FeatureBlock augment(const std::vector<EngagementRecord>& records,
                     const AugmentOptions& opts = {});

// Reference implementation with the identical contract: deduplicates events
// the same way, then counts by scanning every event/record pair. Quadratic;
// for tests.
FeatureBlock brute_force_counters(const std::vector<EngagementRecord>& records,
                                  const AugmentOptions& opts = {});

// Stable category code for an opaque language id.
double language_code(const std::string& language);

}  // namespace engpred::transfeat
