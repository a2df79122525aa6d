#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "engpred/errors.hpp"
#include "engpred/ingest.hpp"
#include "engpred/synthgen.hpp"

using namespace engpred;

TEST_CASE("same config and seed give byte-identical output") {
  synthgen::GenConfig cfg;
  cfg.n_users = 40;
  cfg.n_tweets = 80;
  cfg.n_records = 300;
  auto a = synthgen::generate(cfg);
  auto b = synthgen::generate(cfg);
  REQUIRE(a.records.size() == b.records.size());
  CHECK(a.records == b.records);
  CHECK(a.truth.probabilities == b.truth.probabilities);

  cfg.seed = 2;
  auto c = synthgen::generate(cfg);
  CHECK(a.records != c.records);
}

TEST_CASE("every generated record survives the parser round trip") {
  synthgen::GenConfig cfg;
  cfg.n_users = 30;
  cfg.n_tweets = 60;
  cfg.n_records = 400;
  auto recs = synthgen::generate(cfg).records;
  for (const auto& r : recs) {
    CHECK(ingest::parse_line(synthgen::serialize_record(r), 1) == r);
  }
}

TEST_CASE("zero weights reproduce the configured base rate") {
  synthgen::GenConfig cfg;
  cfg.n_users = 2000;
  cfg.n_tweets = 20000;
  cfg.n_records = 100000;
  cfg.base_rates = {0.05, 0.10, 0.02, 0.30};
  cfg.signal_weights.clear();
  auto recs = synthgen::generate(cfg).records;
  auto st = ingest::dataset_stats(recs);
  CHECK(std::abs(st.positive_rates[static_cast<int>(EngagementType::Like)] - 0.30) <
        0.01);
}

TEST_CASE("hot token lifts the like rate of carrying tweets") {
  synthgen::GenConfig cfg;
  cfg.n_users = 500;
  cfg.n_tweets = 4000;
  cfg.n_records = 40000;
  cfg.signal_weights = {{"hot_hashtag", 2.0}};
  auto recs = synthgen::generate(cfg).records;

  std::size_t hot_n = 0, hot_pos = 0, cold_n = 0, cold_pos = 0;
  for (const auto& r : recs) {
    bool hot = std::find(r.text_tokens.begin(), r.text_tokens.end(),
                         cfg.hot_token_id) != r.text_tokens.end();
    bool pos = r.like_ts.has_value();
    (hot ? hot_n : cold_n) += 1;
    if (pos) (hot ? hot_pos : cold_pos) += 1;
  }
  REQUIRE(hot_n > 100);
  REQUIRE(cold_n > 100);
  double hot_rate = double(hot_pos) / double(hot_n);
  double cold_rate = double(cold_pos) / double(cold_n);
  CHECK(hot_rate > cold_rate);
}

TEST_CASE("degenerate config with zero base rate yields no positives") {
  synthgen::GenConfig cfg;
  cfg.n_users = 20;
  cfg.n_tweets = 40;
  cfg.n_records = 200;
  cfg.base_rates = {0.0, 0.0, 0.0, 0.0};
  cfg.signal_weights.clear();
  auto out = synthgen::generate(cfg);
  for (const auto& r : out.records)
    for (auto t : kAllEngagementTypes) CHECK(!r.has_engagement(t));
  for (const auto& probs : out.truth.probabilities)
    for (double p : probs) CHECK(p == 0.0);
}

TEST_CASE("engagement timestamps sit strictly after the tweet") {
  synthgen::GenConfig cfg;
  cfg.n_users = 50;
  cfg.n_tweets = 100;
  cfg.n_records = 1000;
  cfg.base_rates = {0.3, 0.3, 0.3, 0.3};
  auto recs = synthgen::generate(cfg).records;
  for (const auto& r : recs)
    for (auto t : kAllEngagementTypes)
      if (r.engagement_ts(t)) CHECK(*r.engagement_ts(t) > r.tweet_timestamp);
}

TEST_CASE("config validation rejects bad shapes") {
  synthgen::GenConfig cfg;
  cfg.n_records = cfg.n_tweets - 1;
  CHECK_THROWS_AS(cfg.validate(), UsageError);

  cfg = {};
  cfg.english_fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), UsageError);

  cfg = {};
  cfg.follower_alpha = 1.0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
}

TEST_CASE("config JSON round-trips") {
  synthgen::GenConfig cfg;
  cfg.n_records = 12345;
  cfg.signal_weights = {{"affinity", 1.5}, {"hot_hashtag", 2.0}};
  cfg.base_rates = {0.01, 0.02, 0.03, 0.04};
  auto back = synthgen::GenConfig::from_json(cfg.to_json());
  CHECK(back.n_records == 12345);
  CHECK(back.signal_weights == cfg.signal_weights);
  CHECK(back.base_rates == cfg.base_rates);
  CHECK_THROWS_AS(synthgen::GenConfig::from_json("{nope"), UsageError);
}

TEST_CASE("all-empty lists serialize to empty fields that parse back") {
  EngagementRecord r;
  r.tweet_id = "T0";
  r.language = "L0";
  r.tweet_timestamp = 1'580'000'000;
  r.author = {"UA", 10, 10, false, 1'400'000'000};
  r.reader = {"UB", 10, 10, false, 1'400'000'000};
  auto line = synthgen::serialize_record(r);
  CHECK(line.substr(0, 2) == "\t\t");  // tokens and hashtags both empty
  CHECK(ingest::parse_line(line, 1) == r);
}
