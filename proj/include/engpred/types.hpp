#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace engpred {

// The four engagement kinds. Ordinals are stable and used for array indexing,
// label vectors and file column order. Quote is a retweet with comment.
enum class EngagementType : int { Reply = 0, Retweet = 1, Quote = 2, Like = 3 };

inline constexpr int kNumEngagementTypes = 4;
inline constexpr std::array<EngagementType, 4> kAllEngagementTypes = {
    EngagementType::Reply, EngagementType::Retweet, EngagementType::Quote,
    EngagementType::Like};

const char* to_string(EngagementType t);
// Accepts canonical names, case-insensitive. Throws UsageError on anything else.
EngagementType engagement_from_string(const std::string& s);

enum class TweetType : int { TopLevel = 0, Quote = 1, Retweet = 2, Reply = 3 };
enum class MediaType : int { Photo = 0, Video = 1, GIF = 2 };

const char* to_string(TweetType t);
const char* to_string(MediaType m);

struct UserSnapshot {
  std::string user_id;
  std::int64_t follower_count = 0;   // capped at 2e11 on parse
  std::int64_t following_count = 0;
  bool is_verified = false;
  std::int64_t account_creation = 0;  // seconds since epoch, > 0

  bool operator==(const UserSnapshot&) const = default;
};

// One (tweet, reader) impression. Engagement timestamps double as labels:
// a present timestamp means the engagement happened.
struct EngagementRecord {
  std::vector<std::uint32_t> text_tokens;  // subword token ids
  std::vector<std::string> hashtags;
  std::string tweet_id;
  std::vector<MediaType> present_media;
  std::vector<std::string> present_domains;
  TweetType tweet_type = TweetType::TopLevel;
  std::string language;
  std::int64_t tweet_timestamp = 0;
  UserSnapshot author;  // tweet creator
  UserSnapshot reader;  // user shown the tweet
  bool reader_follows_author = false;
  std::optional<std::int64_t> reply_ts;
  std::optional<std::int64_t> retweet_ts;
  std::optional<std::int64_t> quote_ts;
  std::optional<std::int64_t> like_ts;

  const std::optional<std::int64_t>& engagement_ts(EngagementType t) const {
    switch (t) {
      case EngagementType::Reply: return reply_ts;
      case EngagementType::Retweet: return retweet_ts;
      case EngagementType::Quote: return quote_ts;
      default: return like_ts;
    }
  }
  std::optional<std::int64_t>& engagement_ts(EngagementType t) {
    return const_cast<std::optional<std::int64_t>&>(
        const_cast<const EngagementRecord*>(this)->engagement_ts(t));
  }
  bool has_engagement(EngagementType t) const { return engagement_ts(t).has_value(); }

  bool operator==(const EngagementRecord&) const = default;
};

}  // namespace engpred
