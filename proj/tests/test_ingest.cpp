#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "engpred/errors.hpp"
#include "engpred/ingest.hpp"
#include "engpred/synthgen.hpp"
#include "engpred/util.hpp"

using namespace engpred;

namespace {

EngagementRecord sample_record() {
  EngagementRecord r;
  r.text_tokens = {101, 2003, 102};
  r.hashtags = {"H1", "H2"};
  r.tweet_id = "T1";
  r.present_media = {MediaType::Photo, MediaType::Video};
  r.present_domains = {"D1"};
  r.tweet_type = TweetType::TopLevel;
  r.language = "L0";
  r.tweet_timestamp = 1'580'000'100;
  r.author = {"UA", 1200, 340, true, 1'400'000'000};
  r.reader = {"UB", 55, 80, false, 1'500'000'000};
  r.reader_follows_author = true;
  r.like_ts = 1'580'000'200;
  return r;
}

std::string temp_path(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / "engpred_ingest_test";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("parse_line inverts serialize_record") {
  auto r = sample_record();
  auto line = synthgen::serialize_record(r);
  CHECK(ingest::parse_line(line, 1) == r);

  r.present_media.clear();
  r.hashtags.clear();
  r.present_domains.clear();
  r.text_tokens.clear();
  r.like_ts.reset();
  CHECK(ingest::parse_line(synthgen::serialize_record(r), 1) == r);
}

TEST_CASE("token field splits on the list delimiter") {
  auto r = sample_record();
  auto rec = ingest::parse_line(synthgen::serialize_record(r), 1);
  CHECK(rec.text_tokens == std::vector<std::uint32_t>{101, 2003, 102});
}

TEST_CASE("empty timestamp column means absent engagement") {
  auto r = sample_record();
  r.like_ts.reset();
  auto rec = ingest::parse_line(synthgen::serialize_record(r), 1);
  CHECK(!rec.like_ts.has_value());
  CHECK(!rec.has_engagement(EngagementType::Like));
}

TEST_CASE("field-count mismatch raises a positioned error") {
  auto line = synthgen::serialize_record(sample_record());
  auto cut = line.substr(0, line.rfind('\t'));  // 22 fields
  CHECK_THROWS_AS(ingest::parse_line(cut, 7), ParseError);
  try {
    ingest::parse_line(cut, 7);
  } catch (const ParseError& e) {
    CHECK(e.line_no == 7);
    CHECK(std::string(e.what()).find("23") != std::string::npos);
  }
}

TEST_CASE("invariant violations are rejected") {
  auto base = sample_record();

  auto same_user = base;
  same_user.reader.user_id = same_user.author.user_id;
  CHECK_THROWS_AS(ingest::parse_line(synthgen::serialize_record(same_user), 1),
                  ParseError);

  auto early_like = base;
  early_like.like_ts = base.tweet_timestamp - 1;
  CHECK_THROWS_AS(ingest::parse_line(synthgen::serialize_record(early_like), 1),
                  ParseError);

  auto bad_line = synthgen::serialize_record(base);
  auto pos = bad_line.find("true");
  bad_line.replace(pos, 4, "yes!");
  CHECK_THROWS_AS(ingest::parse_line(bad_line, 1), ParseError);
}

TEST_CASE("strict and lenient file parsing") {
  auto good = synthgen::serialize_record(sample_record());
  auto path = temp_path("mixed.tsv");
  util::write_file(path, good + "\n" + "garbage line\n" + good + "\n");

  CHECK_THROWS_AS(ingest::parse_tsv(path, {.strict = true}), ParseError);

  ingest::ParseStats stats;
  auto recs = ingest::parse_tsv(path, {.strict = false}, &stats);
  CHECK(recs.size() == 2);
  CHECK(stats.lines_read == 3);
  CHECK(stats.records == 2);
  CHECK(stats.skipped == 1);
  CHECK(!stats.first_error.empty());
}

TEST_CASE("missing file is a data error") {
  CHECK_THROWS_AS(ingest::parse_tsv("/nonexistent/nope.tsv"), DataError);
}

TEST_CASE("random split is a deterministic partition") {
  synthgen::GenConfig cfg;
  cfg.n_users = 50;
  cfg.n_tweets = 100;
  cfg.n_records = 500;
  auto recs = synthgen::generate(cfg).records;

  auto s1 = ingest::split_indices(recs, 0.9, ingest::SplitMode::Random, 11);
  auto s2 = ingest::split_indices(recs, 0.9, ingest::SplitMode::Random, 11);
  CHECK(s1.train == s2.train);
  CHECK(s1.dev == s2.dev);

  std::vector<std::size_t> all = s1.train;
  all.insert(all.end(), s1.dev.begin(), s1.dev.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(recs.size());
  for (std::size_t i = 0; i < expect.size(); ++i) expect[i] = i;
  CHECK(all == expect);

  auto s3 = ingest::split_indices(recs, 0.9, ingest::SplitMode::Random, 12);
  CHECK(s1.train != s3.train);
}

TEST_CASE("chronological split takes the earliest ceil(ratio*n)") {
  std::vector<EngagementRecord> recs;
  for (int i = 0; i < 10; ++i) {
    auto r = sample_record();
    r.tweet_id = "T" + std::to_string(i);
    r.tweet_timestamp = 1'580'000'000 + (9 - i) * 1000;  // reverse order
    r.like_ts = r.tweet_timestamp + 5;
    recs.push_back(r);
  }
  auto [train, dev] = ingest::split(recs, 0.9, ingest::SplitMode::Chronological, 0);
  REQUIRE(train.size() == 9);
  REQUIRE(dev.size() == 1);
  std::int64_t max_train = 0;
  for (const auto& r : train) max_train = std::max(max_train, r.tweet_timestamp);
  CHECK(max_train <= dev[0].tweet_timestamp);
}

TEST_CASE("split rejects out-of-range ratio") {
  std::vector<EngagementRecord> recs{sample_record()};
  CHECK_THROWS_AS(ingest::split(recs, 1.5, ingest::SplitMode::Random, 0), UsageError);
  CHECK_THROWS_AS(ingest::split(recs, 0.0, ingest::SplitMode::Random, 0), UsageError);
  CHECK_THROWS_AS(ingest::split({}, 0.5, ingest::SplitMode::Random, 0), UsageError);
}

TEST_CASE("dataset_stats counts engagements per type") {
  std::vector<EngagementRecord> recs;
  for (int i = 0; i < 4; ++i) {
    auto r = sample_record();
    r.tweet_id = "T" + std::to_string(i);
    r.like_ts.reset();
    if (i == 0) r.like_ts = r.tweet_timestamp + 1;
    recs.push_back(r);
  }
  auto st = ingest::dataset_stats(recs);
  CHECK(st.n == 4);
  CHECK(st.engagement_counts[static_cast<int>(EngagementType::Like)] == 1);
  CHECK(st.positive_rates[static_cast<int>(EngagementType::Like)] ==
        doctest::Approx(0.25));
  CHECK(st.language_histogram.at("L0") == 4);

  auto empty = ingest::dataset_stats({});
  CHECK(empty.n == 0);
  for (auto c : empty.engagement_counts) CHECK(c == 0);
  for (auto p : empty.positive_rates) CHECK(p == 0.0);
}

TEST_CASE("generated positive rate tracks the configured base rate") {
  synthgen::GenConfig cfg;
  cfg.n_users = 2000;
  cfg.n_tweets = 20000;
  cfg.n_records = 100000;
  cfg.base_rates = {0.05, 0.10, 0.02, 0.40};
  auto recs = synthgen::generate(cfg).records;
  auto st = ingest::dataset_stats(recs);
  double rate = st.positive_rates[static_cast<int>(EngagementType::Like)];
  CHECK(std::abs(rate - 0.40) < 0.01);
}
