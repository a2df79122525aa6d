#include "engpred/types.hpp"

#include <algorithm>
#include <cctype>

#include "engpred/errors.hpp"

namespace engpred {

const char* to_string(EngagementType t) {
  switch (t) {
    case EngagementType::Reply: return "Reply";
    case EngagementType::Retweet: return "Retweet";
    case EngagementType::Quote: return "Quote";
    default: return "Like";
  }
}

EngagementType engagement_from_string(const std::string& s) {
  std::string low(s);
  std::transform(low.begin(), low.end(), low.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (low == "reply") return EngagementType::Reply;
  if (low == "retweet") return EngagementType::Retweet;
  if (low == "quote") return EngagementType::Quote;
  if (low == "like") return EngagementType::Like;
  throw UsageError("unknown engagement type: " + s);
}

const char* to_string(TweetType t) {
  switch (t) {
    case TweetType::TopLevel: return "TopLevel";
    case TweetType::Quote: return "Quote";
    case TweetType::Retweet: return "Retweet";
    default: return "Reply";
  }
}

const char* to_string(MediaType m) {
  switch (m) {
    case MediaType::Photo: return "Photo";
    case MediaType::Video: return "Video";
    default: return "GIF";
  }
}

}  // namespace engpred
