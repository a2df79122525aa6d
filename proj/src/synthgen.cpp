#include "engpred/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "engpred/errors.hpp"
#include "engpred/kg.hpp"
#include "engpred/util.hpp"

namespace engpred::synthgen {

namespace {

double weight_of(const std::map<std::string, double>& w, const std::string& key) {
  auto it = w.find(key);
  return it == w.end() ? 0.0 : it->second;
}

double label_probability(double base, double z) {
  if (base <= 0.0) return 0.0;
  if (base >= 1.0) return 1.0;
  double logit = std::log(base / (1.0 - base)) + z;
  return 1.0 / (1.0 + std::exp(-logit));
}

struct UserState {
  UserSnapshot snapshot;
  std::string language;
  std::vector<int> prefs;  // indices of preferred authors
};

}  // namespace

void GenConfig::validate() const {
  auto frac = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (n_users < 2) throw UsageError("n_users must be >= 2");
  if (n_tweets < 1 || n_records < n_tweets)
    throw UsageError("need n_records >= n_tweets >= 1");
  if (n_hashtags < 1 || n_domains < 1 || n_languages < 1)
    throw UsageError("entity pool sizes must be positive");
  if (!frac(english_fraction) || !frac(hot_token_fraction) || !frac(pref_author_prob))
    throw UsageError("fractions must lie in [0,1]");
  for (double b : base_rates)
    if (!frac(b)) throw UsageError("base rates must lie in [0,1]");
  if (follower_alpha <= 1.0) throw UsageError("follower_alpha must be > 1");
  if (vocab_size < 2) throw UsageError("vocab_size must be >= 2");
  if (tokens_min < 1 || tokens_max < tokens_min) throw UsageError("bad token length range");
  if (time_span <= 0 || start_timestamp <= 0) throw UsageError("bad time range");
}

Generated generate(const GenConfig& cfg) {
  cfg.validate();

  util::Rng rng_users(util::derive_seed(cfg.seed, "synthgen.users"));
  util::Rng rng_tweets(util::derive_seed(cfg.seed, "synthgen.tweets"));
  util::Rng rng_struct(util::derive_seed(cfg.seed, "synthgen.records"));
  util::Rng rng_labels(util::derive_seed(cfg.seed, "synthgen.labels"));

  auto pick_language = [&](util::Rng& rng) -> std::string {
    if (cfg.n_languages == 1 || rng.bernoulli(cfg.english_fraction))
      return GenConfig::english_language_id();
    return "L" + std::to_string(1 + rng.uniform_int(
                                        static_cast<std::uint64_t>(cfg.n_languages - 1)));
  };

  // Representative counts, one per follower class, so every class is populated.
  static constexpr std::int64_t kClassReps[8] = {100,    300,     800,       5'000,
                                                 50'000, 500'000, 5'000'000, 50'000'000};

  std::vector<UserState> users(static_cast<std::size_t>(cfg.n_users));
  for (int i = 0; i < cfg.n_users; ++i) {
    auto& u = users[static_cast<std::size_t>(i)];
    u.snapshot.user_id = "U" + std::to_string(i);
    if (i < 8) {
      u.snapshot.follower_count = kClassReps[i];
    } else {
      // discrete power law: P(X >= x) ~ x^-(alpha-1), shifted so 0 is possible
      double x = std::pow(1.0 - rng_users.uniform01(), -1.0 / (cfg.follower_alpha - 1.0));
      u.snapshot.follower_count =
          std::min<std::int64_t>(200'000'000, static_cast<std::int64_t>(x) - 1);
    }
    double y = std::pow(1.0 - rng_users.uniform01(), -1.0 / 1.2);
    u.snapshot.following_count = std::min<std::int64_t>(100'000, static_cast<std::int64_t>(y));
    u.snapshot.is_verified =
        rng_users.bernoulli(u.snapshot.follower_count > 100'000 ? 0.5 : 0.01);
    u.snapshot.account_creation =
        cfg.start_timestamp - 86'400 - static_cast<std::int64_t>(rng_users.uniform_int(10ULL * 365 * 86'400));
    u.language = pick_language(rng_users);
    int n_prefs = std::min(cfg.prefs_per_user, cfg.n_users - 1);
    while (static_cast<int>(u.prefs.size()) < n_prefs) {
      int cand = static_cast<int>(rng_users.uniform_int(static_cast<std::uint64_t>(cfg.n_users)));
      if (cand == i) continue;
      if (std::find(u.prefs.begin(), u.prefs.end(), cand) == u.prefs.end())
        u.prefs.push_back(cand);
    }
  }

  std::vector<std::vector<int>> fans(static_cast<std::size_t>(cfg.n_users));
  for (int i = 0; i < cfg.n_users; ++i)
    for (int a : users[static_cast<std::size_t>(i)].prefs)
      fans[static_cast<std::size_t>(a)].push_back(i);

  struct Tweet {
    EngagementRecord proto;  // tweet-side fields only
    int author = 0;
    bool hot = false;
  };

  std::vector<Tweet> tweets(static_cast<std::size_t>(cfg.n_tweets));
  for (int k = 0; k < cfg.n_tweets; ++k) {
    auto& t = tweets[static_cast<std::size_t>(k)];
    auto& p = t.proto;
    t.author = static_cast<int>(rng_tweets.uniform_int(static_cast<std::uint64_t>(cfg.n_users)));
    p.tweet_id = "T" + std::to_string(k);
    int len = cfg.tokens_min +
              static_cast<int>(rng_tweets.uniform_int(
                  static_cast<std::uint64_t>(cfg.tokens_max - cfg.tokens_min + 1)));
    p.text_tokens.reserve(static_cast<std::size_t>(len) + 1);
    for (int j = 0; j < len; ++j) {
      // draw from the vocabulary minus the hot token, which only enters below
      std::uint32_t tok;
      if (cfg.hot_token_id < cfg.vocab_size) {
        tok = static_cast<std::uint32_t>(rng_tweets.uniform_int(cfg.vocab_size - 1));
        if (tok >= cfg.hot_token_id) ++tok;
      } else {
        tok = static_cast<std::uint32_t>(rng_tweets.uniform_int(cfg.vocab_size));
      }
      p.text_tokens.push_back(tok);
    }
    t.hot = rng_tweets.bernoulli(cfg.hot_token_fraction);
    if (t.hot) {
      auto pos = rng_tweets.uniform_int(p.text_tokens.size() + 1);
      p.text_tokens.insert(p.text_tokens.begin() + static_cast<std::ptrdiff_t>(pos),
                           cfg.hot_token_id);
    }
    std::uint64_t n_tags = rng_tweets.uniform_int(4);  // 0..3
    while (p.hashtags.size() < n_tags) {
      std::string h = "H" + std::to_string(rng_tweets.uniform_int(
                              static_cast<std::uint64_t>(cfg.n_hashtags)));
      if (std::find(p.hashtags.begin(), p.hashtags.end(), h) == p.hashtags.end())
        p.hashtags.push_back(h);
    }
    double ud = rng_tweets.uniform01();
    int n_dom = ud < 0.7 ? 0 : (ud < 0.95 ? 1 : 2);
    while (static_cast<int>(p.present_domains.size()) < n_dom) {
      std::string d = "D" + std::to_string(rng_tweets.uniform_int(
                              static_cast<std::uint64_t>(cfg.n_domains)));
      if (std::find(p.present_domains.begin(), p.present_domains.end(), d) ==
          p.present_domains.end())
        p.present_domains.push_back(d);
    }
    if (!rng_tweets.bernoulli(0.4)) {
      switch (rng_tweets.uniform_int(5)) {
        case 0: p.present_media = {MediaType::Photo}; break;
        case 1: p.present_media = {MediaType::Video}; break;
        case 2: p.present_media = {MediaType::GIF}; break;
        case 3: p.present_media = {MediaType::Photo, MediaType::Photo}; break;
        default: p.present_media = {MediaType::Photo, MediaType::Video}; break;
      }
    }
    double ut = rng_tweets.uniform01();
    p.tweet_type = ut < 0.6    ? TweetType::TopLevel
                   : ut < 0.8  ? TweetType::Retweet
                   : ut < 0.95 ? TweetType::Reply
                               : TweetType::Quote;
    p.language = pick_language(rng_tweets);
    p.tweet_timestamp =
        cfg.start_timestamp + static_cast<std::int64_t>(rng_tweets.uniform_int(
                                  static_cast<std::uint64_t>(cfg.time_span)));
  }

  const double w_class = weight_of(cfg.signal_weights, "follower_class");
  const double w_affinity = weight_of(cfg.signal_weights, "affinity");
  const double w_hot = weight_of(cfg.signal_weights, "hot_hashtag");
  const double w_lang = weight_of(cfg.signal_weights, "language_match");
  const double w_follow = weight_of(cfg.signal_weights, "reader_follows");

  Generated out;
  out.records.reserve(static_cast<std::size_t>(cfg.n_records));
  out.truth.probabilities.reserve(static_cast<std::size_t>(cfg.n_records));
  out.truth.coefficients = {{"follower_class", w_class},
                            {"affinity", w_affinity},
                            {"hot_hashtag", w_hot},
                            {"language_match", w_lang},
                            {"reader_follows", w_follow}};

  for (int k = 0; k < cfg.n_records; ++k) {
    const auto& tweet =
        tweets[k < cfg.n_tweets
                   ? static_cast<std::size_t>(k)
                   : static_cast<std::size_t>(rng_struct.uniform_int(
                         static_cast<std::uint64_t>(cfg.n_tweets)))];
    int author = tweet.author;

    int reader = -1;
    const auto& fan_list = fans[static_cast<std::size_t>(author)];
    if (!fan_list.empty() && rng_struct.bernoulli(cfg.pref_author_prob)) {
      reader = fan_list[rng_struct.uniform_int(fan_list.size())];
    } else {
      do {
        reader = static_cast<int>(
            rng_struct.uniform_int(static_cast<std::uint64_t>(cfg.n_users)));
      } while (reader == author);
    }

    const auto& ru = users[static_cast<std::size_t>(reader)];
    const auto& au = users[static_cast<std::size_t>(author)];
    bool affinity =
        std::find(ru.prefs.begin(), ru.prefs.end(), author) != ru.prefs.end();
    bool follows = rng_struct.bernoulli(affinity ? 0.8 : 0.05);
    bool lang_match = tweet.proto.language == ru.language;

    EngagementRecord r = tweet.proto;
    r.author = au.snapshot;
    r.reader = ru.snapshot;
    r.reader_follows_author = follows;

    double z = w_class * (kg::follower_class(au.snapshot.follower_count) / 7.0) +
               w_affinity * (affinity ? 1.0 : 0.0) + w_hot * (tweet.hot ? 1.0 : 0.0) +
               w_lang * (lang_match ? 1.0 : 0.0) + w_follow * (follows ? 1.0 : 0.0);

    std::array<double, kNumEngagementTypes> probs{};
    std::array<std::int64_t, kNumEngagementTypes> offsets{};
    for (int t = 0; t < kNumEngagementTypes; ++t)
      offsets[t] = 1 + static_cast<std::int64_t>(rng_struct.uniform_int(48ULL * 3'600));
    for (int t = 0; t < kNumEngagementTypes; ++t) {
      probs[t] = label_probability(cfg.base_rates[static_cast<std::size_t>(t)], z);
      if (rng_labels.uniform01() < probs[t])
        r.engagement_ts(static_cast<EngagementType>(t)) = r.tweet_timestamp + offsets[t];
    }
    out.truth.probabilities.push_back(probs);
    out.records.push_back(std::move(r));
  }
  return out;
}

std::string serialize_record(const EngagementRecord& r) {
  std::string line;
  line.reserve(256);
  auto list = [&](auto const& v, auto&& fmt) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) line += '|';
      line += fmt(v[i]);
    }
    line += '\t';
  };
  list(r.text_tokens, [](std::uint32_t t) { return std::to_string(t); });
  list(r.hashtags, [](const std::string& s) { return s; });
  line += r.tweet_id;
  line += '\t';
  list(r.present_media, [](MediaType m) { return std::string(to_string(m)); });
  list(r.present_domains, [](const std::string& s) { return s; });
  line += to_string(r.tweet_type);
  line += '\t';
  line += r.language;
  line += '\t';
  line += std::to_string(r.tweet_timestamp);
  line += '\t';
  auto user = [&](const UserSnapshot& u) {
    line += u.user_id;
    line += '\t';
    line += std::to_string(u.follower_count);
    line += '\t';
    line += std::to_string(u.following_count);
    line += '\t';
    line += u.is_verified ? "true" : "false";
    line += '\t';
    line += std::to_string(u.account_creation);
    line += '\t';
  };
  user(r.author);
  user(r.reader);
  line += r.reader_follows_author ? "true" : "false";
  for (auto t : kAllEngagementTypes) {
    line += '\t';
    const auto& ts = r.engagement_ts(t);
    if (ts) line += std::to_string(*ts);
  }
  return line;
}

void write_tsv(const std::vector<EngagementRecord>& records, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  for (const auto& r : records) {
    f << serialize_record(r) << '\n';
    if (!f) throw DataError("write failed: " + path);
  }
}

std::string GenConfig::to_json() const {
  nlohmann::json j;
  j["n_users"] = n_users;
  j["n_tweets"] = n_tweets;
  j["n_records"] = n_records;
  j["n_hashtags"] = n_hashtags;
  j["n_domains"] = n_domains;
  j["n_languages"] = n_languages;
  j["english_fraction"] = english_fraction;
  j["base_rates"] = {{"reply", base_rates[0]},
                     {"retweet", base_rates[1]},
                     {"quote", base_rates[2]},
                     {"like", base_rates[3]}};
  j["signal_weights"] = signal_weights;
  j["follower_alpha"] = follower_alpha;
  j["seed"] = seed;
  j["hot_token_id"] = hot_token_id;
  j["hot_token_fraction"] = hot_token_fraction;
  j["prefs_per_user"] = prefs_per_user;
  j["pref_author_prob"] = pref_author_prob;
  j["vocab_size"] = vocab_size;
  j["tokens_min"] = tokens_min;
  j["tokens_max"] = tokens_max;
  j["start_timestamp"] = start_timestamp;
  j["time_span"] = time_span;
  return j.dump(2);
}

GenConfig GenConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad generator config JSON: ") + e.what());
  }
  GenConfig c;
  try {
    c.n_users = j.value("n_users", c.n_users);
    c.n_tweets = j.value("n_tweets", c.n_tweets);
    c.n_records = j.value("n_records", c.n_records);
    c.n_hashtags = j.value("n_hashtags", c.n_hashtags);
    c.n_domains = j.value("n_domains", c.n_domains);
    c.n_languages = j.value("n_languages", c.n_languages);
    c.english_fraction = j.value("english_fraction", c.english_fraction);
    if (j.contains("base_rates")) {
      const auto& b = j.at("base_rates");
      c.base_rates[0] = b.value("reply", c.base_rates[0]);
      c.base_rates[1] = b.value("retweet", c.base_rates[1]);
      c.base_rates[2] = b.value("quote", c.base_rates[2]);
      c.base_rates[3] = b.value("like", c.base_rates[3]);
    }
    if (j.contains("signal_weights"))
      c.signal_weights =
          j.at("signal_weights").get<std::map<std::string, double>>();
    c.follower_alpha = j.value("follower_alpha", c.follower_alpha);
    c.seed = j.value("seed", c.seed);
    c.hot_token_id = j.value("hot_token_id", c.hot_token_id);
    c.hot_token_fraction = j.value("hot_token_fraction", c.hot_token_fraction);
    c.prefs_per_user = j.value("prefs_per_user", c.prefs_per_user);
    c.pref_author_prob = j.value("pref_author_prob", c.pref_author_prob);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.tokens_min = j.value("tokens_min", c.tokens_min);
    c.tokens_max = j.value("tokens_max", c.tokens_max);
    c.start_timestamp = j.value("start_timestamp", c.start_timestamp);
    c.time_span = j.value("time_span", c.time_span);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad generator config field: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace engpred::synthgen
