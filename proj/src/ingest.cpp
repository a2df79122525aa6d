#include "engpred/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "engpred/errors.hpp"
#include "engpred/util.hpp"

namespace engpred::ingest {

namespace {

constexpr std::int64_t kMaxFollowerCount = 200'000'000'000LL;  // 2e11 sanity cap

std::int64_t parse_i64(std::string_view s, std::size_t line_no, int field) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ParseError("bad integer '" + std::string(s) + "'", line_no, field);
  return v;
}

bool parse_bool(std::string_view s, std::size_t line_no, int field) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ParseError("bad boolean '" + std::string(s) + "'", line_no, field);
}

std::optional<std::int64_t> parse_opt_ts(std::string_view s, std::size_t line_no, int field) {
  if (s.empty()) return std::nullopt;
  return parse_i64(s, line_no, field);
}

std::vector<std::string> parse_list(std::string_view s) {
  if (s.empty()) return {};
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == '|') {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

TweetType parse_tweet_type(std::string_view s, std::size_t line_no, int field) {
  if (s == "TopLevel") return TweetType::TopLevel;
  if (s == "Quote") return TweetType::Quote;
  if (s == "Retweet") return TweetType::Retweet;
  if (s == "Reply") return TweetType::Reply;
  throw ParseError("bad tweet_type '" + std::string(s) + "'", line_no, field);
}

MediaType parse_media(std::string_view s, std::size_t line_no, int field) {
  if (s == "Photo") return MediaType::Photo;
  if (s == "Video") return MediaType::Video;
  if (s == "GIF") return MediaType::GIF;
  throw ParseError("bad media value '" + std::string(s) + "'", line_no, field);
}

UserSnapshot parse_user(const std::vector<std::string_view>& f, int base,
                        std::size_t line_no) {
  UserSnapshot u;
  u.user_id = std::string(f[base]);
  if (u.user_id.empty()) throw ParseError("empty user_id", line_no, base);
  u.follower_count = parse_i64(f[base + 1], line_no, base + 1);
  u.following_count = parse_i64(f[base + 2], line_no, base + 2);
  u.is_verified = parse_bool(f[base + 3], line_no, base + 3);
  u.account_creation = parse_i64(f[base + 4], line_no, base + 4);
  if (u.follower_count < 0 || u.follower_count > kMaxFollowerCount)
    throw ParseError("follower_count out of range", line_no, base + 1);
  if (u.following_count < 0)
    throw ParseError("following_count negative", line_no, base + 2);
  if (u.account_creation <= 0)
    throw ParseError("account_creation must be > 0", line_no, base + 4);
  return u;
}

}  // namespace

EngagementRecord parse_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string_view> f;
  f.reserve(kTsvFieldCount);
  std::string_view sv(line);
  std::size_t start = 0;
  for (std::size_t i = 0; i <= sv.size(); ++i) {
    if (i == sv.size() || sv[i] == '\t') {
      f.push_back(sv.substr(start, i - start));
      start = i + 1;
    }
  }
  if (static_cast<int>(f.size()) != kTsvFieldCount)
    throw ParseError("expected " + std::to_string(kTsvFieldCount) + " fields, got " +
                         std::to_string(f.size()),
                     line_no, -1);

  EngagementRecord r;
  for (const auto& tok : parse_list(f[0])) {
    std::int64_t v = parse_i64(tok, line_no, 0);
    if (v < 0 || v > 0xFFFFFFFFLL)
      throw ParseError("token id out of range", line_no, 0);
    r.text_tokens.push_back(static_cast<std::uint32_t>(v));
  }
  r.hashtags = parse_list(f[1]);
  r.tweet_id = std::string(f[2]);
  if (r.tweet_id.empty()) throw ParseError("empty tweet_id", line_no, 2);
  for (const auto& m : parse_list(f[3])) r.present_media.push_back(parse_media(m, line_no, 3));
  r.present_domains = parse_list(f[4]);
  r.tweet_type = parse_tweet_type(f[5], line_no, 5);
  r.language = std::string(f[6]);
  if (r.language.empty()) throw ParseError("empty language", line_no, 6);
  r.tweet_timestamp = parse_i64(f[7], line_no, 7);
  if (r.tweet_timestamp <= 0) throw ParseError("tweet_timestamp must be > 0", line_no, 7);
  r.author = parse_user(f, 8, line_no);
  r.reader = parse_user(f, 13, line_no);
  if (r.author.user_id == r.reader.user_id)
    throw ParseError("author and reader must differ", line_no, 13);
  r.reader_follows_author = parse_bool(f[18], line_no, 18);
  r.reply_ts = parse_opt_ts(f[19], line_no, 19);
  r.retweet_ts = parse_opt_ts(f[20], line_no, 20);
  r.quote_ts = parse_opt_ts(f[21], line_no, 21);
  r.like_ts = parse_opt_ts(f[22], line_no, 22);
  for (auto t : kAllEngagementTypes) {
    const auto& ts = r.engagement_ts(t);
    if (ts && *ts < r.tweet_timestamp)
      throw ParseError("engagement timestamp precedes tweet_timestamp", line_no,
                       19 + static_cast<int>(t));
  }
  return r;
}

TsvReader::TsvReader(const std::string& path, ParseOptions opts)
    : in_(std::make_unique<std::ifstream>(path)), opts_(opts) {
  if (!*in_) throw DataError("cannot open " + path);
}

TsvReader::~TsvReader() = default;
TsvReader::TsvReader(TsvReader&&) noexcept = default;
TsvReader& TsvReader::operator=(TsvReader&&) noexcept = default;

bool TsvReader::next(EngagementRecord& out) {
  std::string line;
  while (std::getline(*in_, line)) {
    ++stats_.lines_read;
    try {
      out = parse_line(line, stats_.lines_read);
      ++stats_.records;
      return true;
    } catch (const ParseError& e) {
      if (opts_.strict) throw;
      ++stats_.skipped;
      if (stats_.first_error.empty()) stats_.first_error = e.what();
    }
  }
  return false;
}

std::vector<EngagementRecord> parse_tsv(const std::string& path, ParseOptions opts,
                                        ParseStats* stats) {
  TsvReader reader(path, opts);
  std::vector<EngagementRecord> out;
  EngagementRecord r;
  while (reader.next(r)) out.push_back(std::move(r));
  if (stats) *stats = reader.stats();
  return out;
}

SplitIndices split_indices(const std::vector<EngagementRecord>& records, double ratio,
                           SplitMode mode, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw UsageError("split ratio must be in (0,1), got " + std::to_string(ratio));
  if (records.empty()) throw UsageError("cannot split an empty record set");

  SplitIndices out;
  if (mode == SplitMode::Random) {
    util::Rng rng(seed);
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (rng.uniform01() < ratio)
        out.train.push_back(i);
      else
        out.dev.push_back(i);
    }
  } else {
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return records[a].tweet_timestamp < records[b].tweet_timestamp;
    });
    auto n_train = static_cast<std::size_t>(
        std::ceil(ratio * static_cast<double>(records.size())));
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.dev.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  }
  return out;
}

std::pair<std::vector<EngagementRecord>, std::vector<EngagementRecord>> split(
    const std::vector<EngagementRecord>& records, double ratio, SplitMode mode,
    std::uint64_t seed) {
  auto idx = split_indices(records, ratio, mode, seed);
  std::pair<std::vector<EngagementRecord>, std::vector<EngagementRecord>> out;
  out.first.reserve(idx.train.size());
  out.second.reserve(idx.dev.size());
  for (auto i : idx.train) out.first.push_back(records[i]);
  for (auto i : idx.dev) out.second.push_back(records[i]);
  return out;
}

StatsReport dataset_stats(const std::vector<EngagementRecord>& records) {
  StatsReport s;
  s.n = records.size();
  for (const auto& r : records) {
    for (auto t : kAllEngagementTypes)
      if (r.has_engagement(t)) ++s.engagement_counts[static_cast<int>(t)];
    ++s.language_histogram[r.language];
  }
  for (int t = 0; t < kNumEngagementTypes; ++t)
    s.positive_rates[t] =
        s.n == 0 ? 0.0
                 : static_cast<double>(s.engagement_counts[t]) / static_cast<double>(s.n);
  return s;
}

std::string StatsReport::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  for (auto t : kAllEngagementTypes) {
    auto i = static_cast<int>(t);
    j["engagement_counts"][to_string(t)] = engagement_counts[i];
    j["positive_rates"][to_string(t)] = positive_rates[i];
  }
  j["languages"] = language_histogram;
  return j.dump(2);
}

std::string StatsReport::render() const {
  std::ostringstream os;
  os << "records: " << n << "\n";
  for (auto t : kAllEngagementTypes) {
    auto i = static_cast<int>(t);
    os << to_string(t) << ": " << engagement_counts[i] << " (rate ";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", positive_rates[i]);
    os << buf << ")\n";
  }
  os << "languages: " << language_histogram.size() << "\n";
  return os.str();
}

}  // namespace engpred::ingest
