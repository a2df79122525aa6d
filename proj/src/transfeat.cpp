#include "engpred/transfeat.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <string_view>
#include <tuple>
#include <unordered_map>

#include "engpred/util.hpp"

namespace engpred::transfeat {

namespace {

constexpr std::uint64_t kLanguageBuckets = 1'048'573;  // prime below 2^20

struct Interner {
  std::unordered_map<std::string_view, int> ids;

  int get(const std::string& s) {
    auto [it, inserted] = ids.emplace(s, static_cast<int>(ids.size()));
    return it->second;
  }
};

struct Event {
  std::int64_t time;
  int reader;
  int author;
  int tweet;
  int type;
};

// One event per (reader, tweet, type), earliest timestamp wins.
std::vector<Event> deduped_events(const std::vector<EngagementRecord>& records,
                                  Interner& users, Interner& tweets) {
  std::vector<Event> events;
  for (const auto& r : records) {
    int reader = users.get(r.reader.user_id);
    int author = users.get(r.author.user_id);
    int tweet = tweets.get(r.tweet_id);
    for (auto t : kAllEngagementTypes)
      if (const auto& ts = r.engagement_ts(t))
        events.push_back({*ts, reader, author, tweet, static_cast<int>(t)});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return std::tie(a.reader, a.tweet, a.type, a.time) <
           std::tie(b.reader, b.tweet, b.type, b.time);
  });
  auto last = std::unique(events.begin(), events.end(),
                          [](const Event& a, const Event& b) {
                            return a.reader == b.reader && a.tweet == b.tweet &&
                                   a.type == b.type;
                          });
  events.erase(last, events.end());
  return events;
}

void append_counter_columns(FeatureBlock& block,
                            std::vector<std::array<double, 13>>& counters,
                            std::size_t n, bool per_type_pairs) {
  static const char* kCounterNames[13] = {
      "d1.reader_reply_count",      "d1.reader_retweet_count",
      "d1.reader_quote_count",      "d1.reader_like_count",
      "d1.author_recv_reply_count", "d1.author_recv_retweet_count",
      "d1.author_recv_quote_count", "d1.author_recv_like_count",
      "d1.pair_count",              "d1.pair_reply_count",
      "d1.pair_retweet_count",      "d1.pair_quote_count",
      "d1.pair_like_count"};
  int n_cols = per_type_pairs ? 13 : 9;
  for (int c = 0; c < n_cols; ++c) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = counters[i][static_cast<std::size_t>(c)];
    block.add_column(kCounterNames[c], std::move(col));
  }
}

void append_raw_columns(FeatureBlock& block,
                        const std::vector<EngagementRecord>& records) {
  const std::size_t n = records.size();
  auto col_of = [&](auto&& fn) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = fn(records[i]);
    return col;
  };
  auto age_days = [](std::int64_t tweet_ts, std::int64_t creation) {
    return static_cast<double>(tweet_ts - creation) / 86'400.0;
  };
  auto has_media = [](const EngagementRecord& r, MediaType m) {
    return std::find(r.present_media.begin(), r.present_media.end(), m) !=
                   r.present_media.end()
               ? 1.0
               : 0.0;
  };

  block.add_column("d1.author_follower_count", col_of([](const auto& r) {
                     return static_cast<double>(r.author.follower_count);
                   }));
  block.add_column("d1.author_following_count", col_of([](const auto& r) {
                     return static_cast<double>(r.author.following_count);
                   }));
  block.add_column("d1.reader_follower_count", col_of([](const auto& r) {
                     return static_cast<double>(r.reader.follower_count);
                   }));
  block.add_column("d1.reader_following_count", col_of([](const auto& r) {
                     return static_cast<double>(r.reader.following_count);
                   }));
  block.add_column("d1.author_verified", col_of([](const auto& r) {
                     return r.author.is_verified ? 1.0 : 0.0;
                   }));
  block.add_column("d1.reader_verified", col_of([](const auto& r) {
                     return r.reader.is_verified ? 1.0 : 0.0;
                   }));
  block.add_column("d1.author_account_age_days", col_of([&](const auto& r) {
                     return age_days(r.tweet_timestamp, r.author.account_creation);
                   }));
  block.add_column("d1.reader_account_age_days", col_of([&](const auto& r) {
                     return age_days(r.tweet_timestamp, r.reader.account_creation);
                   }));
  block.add_column("d1.type_toplevel", col_of([](const auto& r) {
                     return r.tweet_type == TweetType::TopLevel ? 1.0 : 0.0;
                   }));
  block.add_column("d1.type_quote", col_of([](const auto& r) {
                     return r.tweet_type == TweetType::Quote ? 1.0 : 0.0;
                   }));
  block.add_column("d1.type_retweet", col_of([](const auto& r) {
                     return r.tweet_type == TweetType::Retweet ? 1.0 : 0.0;
                   }));
  block.add_column("d1.type_reply", col_of([](const auto& r) {
                     return r.tweet_type == TweetType::Reply ? 1.0 : 0.0;
                   }));
  block.add_column("d1.media_photo",
                   col_of([&](const auto& r) { return has_media(r, MediaType::Photo); }));
  block.add_column("d1.media_video",
                   col_of([&](const auto& r) { return has_media(r, MediaType::Video); }));
  block.add_column("d1.media_gif",
                   col_of([&](const auto& r) { return has_media(r, MediaType::GIF); }));
  block.add_column("d1.language_code", col_of([](const auto& r) {
                     return language_code(r.language);
                   }));
  block.add_column("d1.hashtag_count", col_of([](const auto& r) {
                     return static_cast<double>(r.hashtags.size());
                   }));
  block.add_column("d1.domain_count", col_of([](const auto& r) {
                     return static_cast<double>(r.present_domains.size());
                   }));
  block.add_column("d1.reader_follows_author", col_of([](const auto& r) {
                     return r.reader_follows_author ? 1.0 : 0.0;
                   }));
}

}  // namespace

double language_code(const std::string& language) {
  return static_cast<double>(util::fnv1a64(language) % kLanguageBuckets);
}

FeatureBlock augment(const std::vector<EngagementRecord>& records,
                     const AugmentOptions& opts) {
  const std::size_t n = records.size();
  Interner users, tweets;
  // intern in input order so ids are deterministic
  std::vector<int> reader_of(n), author_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    author_of[i] = users.get(records[i].author.user_id);
    reader_of[i] = users.get(records[i].reader.user_id);
    tweets.get(records[i].tweet_id);
  }

  auto events = deduped_events(records, users, tweets);
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.time < b.time; });

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].tweet_timestamp < records[b].tweet_timestamp;
  });

  std::vector<std::array<std::uint32_t, 4>> reader_cnt(users.ids.size(), {0, 0, 0, 0});
  std::vector<std::array<std::uint32_t, 4>> recv_cnt(users.ids.size(), {0, 0, 0, 0});
  std::unordered_map<std::uint64_t, std::array<std::uint32_t, 4>> pair_cnt;
  auto pair_key = [](int reader, int author) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(reader)) << 32) |
           static_cast<std::uint32_t>(author);
  };

  std::vector<std::array<double, 13>> counters(n);
  std::size_t ei = 0;
  for (std::size_t qi : order) {
    const std::int64_t now = records[qi].tweet_timestamp;
    while (ei < events.size() && events[ei].time < now) {
      const auto& e = events[ei];
      reader_cnt[static_cast<std::size_t>(e.reader)][static_cast<std::size_t>(e.type)]++;
      recv_cnt[static_cast<std::size_t>(e.author)][static_cast<std::size_t>(e.type)]++;
      pair_cnt[pair_key(e.reader, e.author)][static_cast<std::size_t>(e.type)]++;
      ++ei;
    }
    auto& out = counters[qi];
    const auto& rc = reader_cnt[static_cast<std::size_t>(reader_of[qi])];
    const auto& ac = recv_cnt[static_cast<std::size_t>(author_of[qi])];
    for (int t = 0; t < 4; ++t) {
      out[static_cast<std::size_t>(t)] = rc[static_cast<std::size_t>(t)];
      out[static_cast<std::size_t>(4 + t)] = ac[static_cast<std::size_t>(t)];
    }
    auto it = pair_cnt.find(pair_key(reader_of[qi], author_of[qi]));
    double total = 0;
    for (int t = 0; t < 4; ++t) {
      double v = it == pair_cnt.end() ? 0.0 : it->second[static_cast<std::size_t>(t)];
      out[static_cast<std::size_t>(9 + t)] = v;
      total += v;
    }
    out[8] = total;
  }

  FeatureBlock block;
  block.rows = n;
  append_counter_columns(block, counters, n, opts.per_type_pair_counts);
  append_raw_columns(block, records);
  return block;
}

FeatureBlock brute_force_counters(const std::vector<EngagementRecord>& records,
                                  const AugmentOptions& opts) {
  const std::size_t n = records.size();
  Interner users, tweets;
  std::vector<int> reader_of(n), author_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    author_of[i] = users.get(records[i].author.user_id);
    reader_of[i] = users.get(records[i].reader.user_id);
    tweets.get(records[i].tweet_id);
  }

  // Independent dedupe route: min-time map per (reader, tweet, type).
  std::map<std::tuple<int, int, int>, std::pair<std::int64_t, int>> earliest;
  for (std::size_t i = 0; i < n; ++i) {
    int tweet = tweets.get(records[i].tweet_id);
    for (auto t : kAllEngagementTypes) {
      const auto& ts = records[i].engagement_ts(t);
      if (!ts) continue;
      auto key = std::make_tuple(reader_of[i], tweet, static_cast<int>(t));
      auto it = earliest.find(key);
      if (it == earliest.end() || *ts < it->second.first)
        earliest[key] = {*ts, author_of[i]};
    }
  }
  std::vector<Event> events;
  events.reserve(earliest.size());
  for (const auto& [key, val] : earliest)
    events.push_back({val.first, std::get<0>(key), val.second, std::get<1>(key),
                      std::get<2>(key)});

  std::vector<std::array<double, 13>> counters(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& out = counters[i];
    out.fill(0);
    const std::int64_t now = records[i].tweet_timestamp;
    for (const auto& e : events) {
      if (e.time >= now) continue;
      if (e.reader == reader_of[i]) out[static_cast<std::size_t>(e.type)] += 1;
      if (e.author == author_of[i]) out[static_cast<std::size_t>(4 + e.type)] += 1;
      if (e.reader == reader_of[i] && e.author == author_of[i]) {
        out[8] += 1;
        out[static_cast<std::size_t>(9 + e.type)] += 1;
      }
    }
  }

  FeatureBlock block;
  block.rows = n;
  append_counter_columns(block, counters, n, opts.per_type_pair_counts);
  append_raw_columns(block, records);
  return block;
}

}  // namespace engpred::transfeat
