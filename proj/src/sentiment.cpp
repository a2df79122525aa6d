#include "engpred/sentiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "engpred/errors.hpp"
#include "engpred/util.hpp"

namespace engpred::sentiment {

namespace {

Label label_for_score(double s) { return s > 0 ? Label::Positive : Label::Negative; }

double parse_real(const std::string& text, std::size_t line_no, int field) {
  double v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size() || !std::isfinite(v))
    throw ParseError("expected a finite real, got '" + text + "'", line_no, field);
  return v;
}

}  // namespace

SentimentFeatures score_lexicon(const EngagementRecord& record,
                                const Lexicon& lexicon,
                                const std::set<std::string>& english_language_ids) {
  if (lexicon.empty()) throw UsageError("sentiment lexicon is empty");
  if (!english_language_ids.count(record.language)) return {};

  double sum = 0;
  int matched = 0;
  for (std::uint64_t token : record.text_tokens) {
    auto it = lexicon.find(token);
    if (it != lexicon.end()) {
      sum += it->second;
      ++matched;
    }
  }
  double s = sum / std::max(1, matched);
  return {label_for_score(s), -s, s};
}

Lexicon hash_lexicon(std::uint64_t vocab_size, std::uint64_t seed) {
  if (vocab_size == 0) throw UsageError("lexicon vocabulary must be non-empty");
  Lexicon lex;
  for (std::uint64_t t = 0; t < vocab_size; ++t) {
    std::uint64_t u = util::splitmix64(util::derive_seed(seed, "sentiment.lexicon", t));
    if (u & 1) lex.emplace(t, (u & 2) ? 1.0 : -1.0);
  }
  if (lex.empty()) throw DataError("hash lexicon came out empty");
  return lex;
}

Lexicon load_lexicon(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  Lexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = util::split_on(line, '\t');
    if (fields.size() != 2) throw ParseError("expected 2 fields", line_no, -1);
    std::uint64_t token = 0;
    auto [p, ec] =
        std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), token);
    if (ec != std::errc() || p != fields[0].data() + fields[0].size())
      throw ParseError("bad token id '" + fields[0] + "'", line_no, 0);
    double polarity = parse_real(fields[1], line_no, 1);
    if (!lex.emplace(token, polarity).second)
      throw ParseError("duplicate token id", line_no, 0);
  }
  if (lex.empty()) throw DataError("lexicon file is empty: " + path);
  return lex;
}

void save_lexicon(const std::string& path, const Lexicon& lexicon) {
  std::vector<std::pair<std::uint64_t, double>> rows(lexicon.begin(), lexicon.end());
  std::sort(rows.begin(), rows.end());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  char buf[40];
  for (const auto& [token, polarity] : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g", polarity);
    f << token << '\t' << buf << '\n';
  }
  if (!f) throw DataError("write failed: " + path);
}

std::map<std::string, SentimentFeatures> load_precomputed(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  std::map<std::string, SentimentFeatures> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = util::split_on(line, '\t');
    if (fields.size() != 4) throw ParseError("expected 4 fields", line_no, -1);
    if (fields[0].empty()) throw ParseError("empty tweet id", line_no, 0);
    SentimentFeatures s;
    if (fields[1] == "0")
      s.label = Label::Negative;
    else if (fields[1] == "1")
      s.label = Label::Positive;
    else
      throw ParseError("label must be 0 or 1, got '" + fields[1] + "'", line_no, 1);
    s.logit_neg = parse_real(fields[2], line_no, 2);
    s.logit_pos = parse_real(fields[3], line_no, 3);
    Label argmax = s.logit_pos > s.logit_neg ? Label::Positive : Label::Negative;
    if (argmax != s.label)
      throw ParseError("label disagrees with logits", line_no, 1);
    if (!out.emplace(fields[0], s).second)
      throw ParseError("duplicate tweet id '" + fields[0] + "'", line_no, 0);
  }
  return out;
}

void save_precomputed(const std::string& path,
                      const std::map<std::string, SentimentFeatures>& scores) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  char neg[40], pos[40];
  for (const auto& [tweet_id, s] : scores) {
    if (!s.present()) continue;
    std::snprintf(neg, sizeof(neg), "%.17g", s.logit_neg);
    std::snprintf(pos, sizeof(pos), "%.17g", s.logit_pos);
    f << tweet_id << '\t' << (s.label == Label::Positive ? '1' : '0') << '\t' << neg
      << '\t' << pos << '\n';
  }
  if (!f) throw DataError("write failed: " + path);
}

Provider lexicon_provider(Lexicon lexicon, std::set<std::string> english_language_ids) {
  if (lexicon.empty()) throw UsageError("sentiment lexicon is empty");
  return [lex = std::move(lexicon),
          english = std::move(english_language_ids)](const EngagementRecord& r) {
    return score_lexicon(r, lex, english);
  };
}

Provider precomputed_provider(std::map<std::string, SentimentFeatures> scores) {
  return [table = std::move(scores)](const EngagementRecord& r) {
    auto it = table.find(r.tweet_id);
    return it == table.end() ? SentimentFeatures{} : it->second;
  };
}

FeatureBlock sentiment_block(const std::vector<EngagementRecord>& records,
                             const Provider& provider) {
  const std::size_t n = records.size();
  std::vector<double> label(n), logit_neg(n), logit_pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto s = provider(records[i]);
    if (s.present()) {
      label[i] = s.label == Label::Positive ? 1.0 : 0.0;
      logit_neg[i] = s.logit_neg;
      logit_pos[i] = s.logit_pos;
    } else {
      label[i] = missing_value();
      logit_neg[i] = missing_value();
      logit_pos[i] = missing_value();
    }
  }
  FeatureBlock block;
  block.add_column("d3.label", std::move(label));
  block.add_column("d3.logit_neg", std::move(logit_neg));
  block.add_column("d3.logit_pos", std::move(logit_pos));
  return block;
}

}  // namespace engpred::sentiment
