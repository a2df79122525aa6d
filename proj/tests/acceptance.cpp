// End-to-end acceptance checks. Each check prints one PASS/FAIL line;
// run with a number 1..10 to execute a single check, no argument runs all.
#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "engpred/content.hpp"
#include "engpred/embedding.hpp"
#include "engpred/ensemble.hpp"
#include "engpred/errors.hpp"
#include "engpred/eval.hpp"
#include "engpred/feature_matrix.hpp"
#include "engpred/gbdt.hpp"
#include "engpred/ingest.hpp"
#include "engpred/kg.hpp"
#include "engpred/pipeline.hpp"
#include "engpred/sentiment.hpp"
#include "engpred/synthgen.hpp"
#include "engpred/transfeat.hpp"
#include "engpred/util.hpp"

namespace fs = std::filesystem;
using namespace engpred;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

bool bits_equal(const FeatureBlock& a, const FeatureBlock& b) {
  if (a.names != b.names || a.rows != b.rows) return false;
  for (std::size_t col = 0; col < a.cols.size(); ++col)
    for (std::size_t row = 0; row < a.rows; ++row)
      if (std::bit_cast<std::uint64_t>(a.cols[col][row]) !=
          std::bit_cast<std::uint64_t>(b.cols[col][row]))
        return false;
  return true;
}

// fast counters equal the quadratic reference on 100 seeded logs
Outcome check_counters() {
  auto start = std::chrono::steady_clock::now();
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    synthgen::GenConfig gc;
    gc.n_records = 10000;
    gc.seed = seed;
    auto records = synthgen::generate(gc).records;
    auto fast = transfeat::augment(records);
    auto slow = transfeat::brute_force_counters(records);
    if (!bits_equal(fast, slow))
      return {false, "blocks differ at seed " + std::to_string(seed)};
  }
  double secs = elapsed_s(start);
  if (secs >= 60.0) return {false, fmt("too slow: %.1fs (budget 60s)", secs)};
  return {true, fmt("100 logs of 10^4 records bit-equal in %.1fs", secs)};
}

// PRAUC and RCE match hand-computed oracles
Outcome check_metric_oracles() {
  double ap = eval::prauc({0.9, 0.8, 0.7}, {1, 0, 1});
  if (std::fabs(ap - 5.0 / 6.0) > 1e-9)
    return {false, fmt("prauc fixture gave %.12f, want 5/6", ap)};

  // CE(model) = -ln 0.8, CE(baseline 0.5) = ln 2
  double r = eval::rce({0.8, 0.2}, {1, 0}, 0.5);
  if (std::fabs(r - 67.80719051126377) > 1e-9)
    return {false, fmt("rce fixture gave %.12f", r)};

  double zero = eval::rce({0.3, 0.3, 0.3, 0.3}, {1, 0, 1, 0}, 0.3);
  if (zero != 0.0)
    return {false, fmt("rce of baseline scores gave %.17g, want exact 0", zero)};

  double perfect = eval::prauc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
  if (perfect != 1.0)
    return {false, fmt("prauc of perfect ranking gave %.17g, want exact 1", perfect)};
  return {true, "prauc 5/6, rce 67.8071905..., exact 0 and 1 cases"};
}

// every follower-class boundary (each MAX and MAX+1) classifies exactly
Outcome check_follower_classes() {
  const std::int64_t max_followers[8] = {150,     500,       1'000,      10'000,
                                         100'000, 1'000'000, 10'000'000, 200'000'000};
  for (int cls = 0; cls < 8; ++cls) {
    if (kg::follower_class(max_followers[cls]) != cls)
      return {false, "MAX of class " + std::to_string(cls) + " misclassified"};
    int above = cls == 7 ? 7 : cls + 1;
    if (kg::follower_class(max_followers[cls] + 1) != above)
      return {false, "MAX+1 of class " + std::to_string(cls) + " misclassified"};
  }
  return {true, "all 16 boundary cases exact"};
}

kg::TypedGraph barbell_graph() {
  kg::TypedGraph g;
  auto key = [](int i) {
    return kg::NodeKey{kg::NodeNamespace::User, std::to_string(i)};
  };
  // nodes 0..49 and 51..100 are cliques, node 50 bridges them
  for (int half = 0; half < 2; ++half) {
    int base = half * 51;
    for (int i = 0; i < 50; ++i)
      for (int j = i + 1; j < 50; ++j)
        g.add_edge(kg::EdgeType::Follow, key(base + i), key(base + j), 1.0);
  }
  g.add_edge(kg::EdgeType::Follow, key(49), key(50), 1.0);
  g.add_edge(kg::EdgeType::Follow, key(50), key(51), 1.0);
  g.finalize();
  return g;
}

// embeddings keep cliques tight: intra minus inter cosine >= 0.2
Outcome check_embedding_separation() {
  auto start = std::chrono::steady_clock::now();
  auto g = barbell_graph();
  std::vector<int> ids(101);
  for (int i = 0; i <= 100; ++i)
    ids[i] = *g.find({kg::NodeNamespace::User, std::to_string(i)});

  int ok = 0;
  double worst = 1e9;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    kg::WalkParams wp;  // default walk parameters
    wp.seed = seed;
    auto walks = kg::generate_walks(g, wp);
    embedding::SgnsParams sp;
    sp.dimension = 16;
    sp.epochs = 2;
    sp.seed = 1000 + seed;
    auto r = embedding::train_sgns(walks, g.node_count(), sp);

    auto cosine = [&](int a, int b) {
      const float* va = &r.vectors[static_cast<std::size_t>(ids[a]) * 16];
      const float* vb = &r.vectors[static_cast<std::size_t>(ids[b]) * 16];
      double dot = 0, na = 0, nb = 0;
      for (int k = 0; k < 16; ++k) {
        dot += va[k] * vb[k];
        na += va[k] * va[k];
        nb += vb[k] * vb[k];
      }
      return dot / (std::sqrt(na) * std::sqrt(nb) + 1e-12);
    };
    double intra = 0, inter = 0;
    long n_intra = 0, n_inter = 0;
    for (int i = 0; i <= 100; ++i) {
      if (i == 50) continue;
      for (int j = i + 1; j <= 100; ++j) {
        if (j == 50) continue;
        double c = cosine(i, j);
        if ((i < 50) == (j < 50)) {
          intra += c;
          ++n_intra;
        } else {
          inter += c;
          ++n_inter;
        }
      }
    }
    double gap = intra / n_intra - inter / n_inter;
    worst = std::min(worst, gap);
    if (gap >= 0.2) ++ok;
  }
  double secs = elapsed_s(start);
  if (secs >= 120.0) return {false, fmt("too slow: %.1fs (budget 120s)", secs)};
  if (ok < 95)
    return {false, fmt("separation held in %.0f/100 seeds, worst gap %.3f", ok, worst)};
  return {true, fmt("%.0f/100 seeds separated (worst gap %.3f) in %.1fs",
                    static_cast<double>(ok), worst, secs)};
}

// first steps follow edge weights; low q walks travel farther
Outcome check_walk_bias() {
  {
    kg::TypedGraph g;
    auto key = [](const char* s) {
      return kg::NodeKey{kg::NodeNamespace::User, s};
    };
    g.add_edge(kg::EdgeType::Follow, key("c"), key("a"), 1.0);
    g.add_edge(kg::EdgeType::Follow, key("c"), key("b"), 2.0);
    g.add_edge(kg::EdgeType::Follow, key("c"), key("d"), 4.0);
    g.finalize();
    kg::WalkParams wp;
    wp.walk_length = 2;
    wp.walks_per_node = 100000;
    wp.seed = 3;
    auto walks = kg::generate_walks(g, wp);
    int center = *g.find(key("c"));
    std::vector<long> counts(static_cast<std::size_t>(g.node_count()), 0);
    long total = 0;
    for (const auto& w : walks)
      if (w[0] == center && w.size() > 1) {
        ++counts[static_cast<std::size_t>(w[1])];
        ++total;
      }
    if (total != 100000)
      return {false, "expected 100000 walks from the weighted node"};
    const char* names[3] = {"a", "b", "d"};
    const double weights[3] = {1, 2, 4};
    for (int i = 0; i < 3; ++i) {
      double freq = static_cast<double>(
                        counts[static_cast<std::size_t>(*g.find(key(names[i])))]) /
                    static_cast<double>(total);
      double want = weights[i] / 7.0;
      if (std::fabs(freq - want) > 0.01)
        return {false, fmt("first-step freq %.4f vs expected %.4f", freq, want)};
    }
  }

  const int n = 25;
  kg::TypedGraph g;
  auto key = [&](int r, int c) {
    return kg::NodeKey{kg::NodeNamespace::User, std::to_string(r * n + c)};
  };
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      if (c + 1 < n) g.add_edge(kg::EdgeType::Follow, key(r, c), key(r, c + 1), 1.0);
      if (r + 1 < n) g.add_edge(kg::EdgeType::Follow, key(r, c), key(r + 1, c), 1.0);
    }
  g.finalize();
  std::vector<std::pair<int, int>> coord(static_cast<std::size_t>(g.node_count()));
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      coord[static_cast<std::size_t>(*g.find(key(r, c)))] = {r, c};

  // mean grid distance between walk start and end, 10 steps per walk
  auto mean_displacement = [&](double q, std::uint64_t seed) {
    kg::WalkParams wp;
    wp.q = q;
    wp.walk_length = 11;
    wp.seed = seed;
    auto walks = kg::generate_walks(g, wp);
    double sum = 0;
    for (const auto& w : walks) {
      auto [r0, c0] = coord[static_cast<std::size_t>(w.front())];
      auto [r1, c1] = coord[static_cast<std::size_t>(w.back())];
      sum += std::abs(r0 - r1) + std::abs(c0 - c1);
    }
    return sum / static_cast<double>(walks.size());
  };
  double min_ratio = 1e9;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    double outward = mean_displacement(0.1, seed);
    double inward = mean_displacement(10.0, seed);
    if (!(outward > inward))
      return {false, fmt("seed displacement q=0.1 %.3f vs q=10 %.3f",
                         outward, inward)};
    min_ratio = std::min(min_ratio, outward / inward);
  }
  return {true, fmt("weights matched within 1%%; q=0.1 farther in 50/50 seeds "
                    "(min ratio %.2f)",
                    min_ratio)};
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // average ranks over score ties, then Mann-Whitney
  std::vector<double> rank(scores.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double pos_rank_sum = 0;
  long pos = 0, neg = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == 1) {
      pos_rank_sum += rank[k];
      ++pos;
    } else {
      ++neg;
    }
  }
  return (pos_rank_sum - static_cast<double>(pos) * (static_cast<double>(pos) + 1) / 2.0) /
         (static_cast<double>(pos) * static_cast<double>(neg));
}

// both trainers agree; logloss is monotone; XOR is learnable
Outcome check_booster() {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    util::Rng rng(seed);
    std::size_t rows = 30 + rng.uniform_int(171);  // <= 200
    std::size_t cols = 1 + rng.uniform_int(5);     // <= 5
    double nan_frac = seed % 2 == 0 ? 0.25 : 0.0;
    FeatureMatrix m;
    m.rows = rows;
    for (std::size_t c = 0; c < cols; ++c) {
      m.names.push_back("f" + std::to_string(c));
      std::vector<double> col(rows);
      for (auto& v : col) {
        if (rng.uniform01() < nan_frac)
          v = std::numeric_limits<double>::quiet_NaN();
        else
          v = std::floor(rng.uniform01() * 16.0) / 4.0;
      }
      m.columns.push_back(std::move(col));
    }
    std::vector<int> y(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      double base = std::isnan(m.columns[0][r]) ? 2.0 : m.columns[0][r];
      y[r] = base + rng.uniform01() * 4.0 > 3.5 ? 1 : 0;
    }
    y[0] = 0;
    y[rows - 1] = 1;
    for (auto& l : m.labels) l = y;

    gbdt::Hyperparams hp;
    hp.n_trees = 4;
    hp.max_depth = 3;
    hp.eta = 0.3;
    hp.subsample = 1.0;
    hp.colsample = 1.0;
    hp.seed = seed;
    auto fast = gbdt::train(m, EngagementType::Like, hp);
    auto slow = gbdt::train_reference(m, EngagementType::Like, hp);
    if (!gbdt::models_equivalent(fast, slow, 1e-9))
      return {false, "trainers disagree at seed " + std::to_string(seed)};
    for (std::size_t t = 1; t < fast.train_logloss.size(); ++t)
      if (fast.train_logloss[t] > fast.train_logloss[t - 1] + 1e-12)
        return {false, "train logloss rose at seed " + std::to_string(seed)};
  }

  util::Rng rng(77);
  const std::size_t n_rows = 10000;
  FeatureMatrix xor_data;
  xor_data.rows = n_rows;
  xor_data.names = {"x1", "x2"};
  xor_data.columns.assign(2, std::vector<double>(n_rows));
  std::vector<int> y(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    double x1 = rng.uniform01(), x2 = rng.uniform01();
    xor_data.columns[0][r] = x1;
    xor_data.columns[1][r] = x2;
    y[r] = (x1 > 0.5) != (x2 > 0.5) ? 1 : 0;
  }
  for (auto& l : xor_data.labels) l = y;
  std::vector<std::size_t> train_idx, dev_idx;
  for (std::size_t r = 0; r < n_rows; ++r)
    (r < 9000 ? train_idx : dev_idx).push_back(r);
  auto train_m = xor_data.select_rows(train_idx);
  auto dev_m = xor_data.select_rows(dev_idx);
  gbdt::Hyperparams hp;
  hp.n_trees = 200;
  hp.max_depth = 3;
  auto model = gbdt::train(train_m, EngagementType::Like, hp);
  auto auc = roc_auc(gbdt::predict(model, dev_m), dev_m.labels_for(EngagementType::Like));
  if (auc < 0.95) return {false, fmt("dev ROC area %.4f < 0.95", auc)};
  return {true, fmt("20 matrices agree; logloss monotone; dev ROC area %.4f", auc)};
}

// three-document vectors match hand-computed values; fits are repeatable
Outcome check_tfidf() {
  // docs {1,2} {1,3} {1,2}, min_df 2 keeps (1) df=3, (1,2) df=2, (2) df=2
  auto vocab = content::TfidfVocabulary::fit({{1, 2}, {1, 3}, {1, 2}}, 100, 2);
  if (vocab.size() != 3) return {false, "vocabulary kept the wrong n-grams"};
  const double idf_df2 = std::log(4.0 / 3.0) + 1.0;  // ln((1+3)/(1+2)) + 1
  auto x = vocab.transform({1, 2});
  if (x.entries.size() != 3) return {false, "transform missed an n-gram"};
  double norm = std::sqrt(1.0 + 2.0 * idf_df2 * idf_df2);
  const double want[3] = {1.0 / norm, idf_df2 / norm, idf_df2 / norm};
  for (std::size_t i = 0; i < 3; ++i)
    if (std::fabs(x.entries[i].second - want[i]) > 1e-9)
      return {false, fmt("component %.0f is %.12f, want %.12f",
                         static_cast<double>(i), x.entries[i].second, want[i])};
  auto lone = vocab.transform({1, 3});
  if (lone.entries.size() != 1 || lone.entries[0].second != 1.0)
    return {false, "single-match document should normalize to exactly 1"};

  // equal-df truncation ties and refits stay deterministic
  std::vector<std::vector<std::uint32_t>> ties{{3}, {1}, {2}, {3}, {1}, {2}};
  auto a = content::TfidfVocabulary::fit(ties, 2, 1);
  auto b = content::TfidfVocabulary::fit(ties, 2, 1);
  if (!(a == b)) return {false, "refit changed the vocabulary"};
  if (a.find(content::make_ngram({1})) < 0 || a.find(content::make_ngram({2})) < 0 ||
      a.find(content::make_ngram({3})) >= 0)
    return {false, "df ties broke toward the wrong n-grams"};
  auto dir = fs::temp_directory_path() / "engpred_acc_tfidf";
  fs::create_directories(dir);
  a.save((dir / "v1.bin").string());
  b.save((dir / "v2.bin").string());
  if (util::hash_file((dir / "v1.bin").string()) !=
      util::hash_file((dir / "v2.bin").string()))
    return {false, "serialized vocabularies differ"};
  return {true, "vectors match within 1e-9; truncation ties deterministic"};
}

// content features beat counters alone when the label follows a hot hashtag
Outcome check_planted_signal() {
  auto start = std::chrono::steady_clock::now();
  auto dir = fs::temp_directory_path() / "engpred_acc_signal";
  fs::remove_all(dir);
  fs::create_directories(dir);

  synthgen::GenConfig gc;
  gc.n_users = 20000;
  gc.n_tweets = 50000;  // few impressions per tweet, so counters carry little
  gc.n_records = 100000;
  gc.base_rates[static_cast<std::size_t>(EngagementType::Like)] = 0.1;
  gc.signal_weights = {{"hot_hashtag", 2.0}};
  gc.seed = 21;
  auto records = synthgen::generate(gc).records;
  auto input = (dir / "log.tsv").string();
  synthgen::write_tsv(records, input);

  pipeline::PipelineConfig cfg;
  cfg.input = input;
  cfg.workdir = (dir / "work").string();
  cfg.gbdt.n_trees = 40;
  cfg.gbdt.max_depth = 3;
  cfg.gbdt.eta = 0.3;
  auto m1 = pipeline::run_model(1, cfg);
  auto m4 = pipeline::run_model(4, cfg);

  auto like = static_cast<std::size_t>(EngagementType::Like);
  double rce1 = m1.report.per_type[like].rce;
  double rce4 = m4.report.per_type[like].rce;
  double pr1 = m1.report.per_type[like].prauc;
  double pr4 = m4.report.per_type[like].prauc;
  double secs = elapsed_s(start);
  if (secs >= 300.0) return {false, fmt("too slow: %.1fs (budget 300s)", secs)};
  if (rce4 < rce1 + 5.0)
    return {false, fmt("dev RCE %.3f vs %.3f, need a +5.0 margin", rce4, rce1)};
  if (!(pr4 > pr1))
    return {false, fmt("dev PRAUC %.4f not above %.4f", pr4, pr1)};
  return {true, fmt("like RCE %.2f vs %.2f", rce4, rce1) +
                    fmt(", PRAUC %.3f vs %.3f", pr4, pr1) +
                    fmt(" in %.0fs", secs)};
}

// with only reader-author affinity planted, the best subset keeps D1
Outcome check_ablation_affinity() {
  auto start = std::chrono::steady_clock::now();
  std::vector<std::string> bests;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    synthgen::GenConfig gc;
    gc.n_users = 400;
    gc.n_tweets = 800;
    gc.n_records = 8000;
    gc.signal_weights = {{"affinity", 2.0}};
    gc.seed = 100 + seed;
    auto records = synthgen::generate(gc).records;
    auto split = ingest::split_indices(records, 0.9, ingest::SplitMode::Random,
                                       util::derive_seed(seed, "acc9.split"));
    std::vector<EngagementRecord> train;
    train.reserve(split.train.size());
    for (auto i : split.train) train.push_back(records[i]);

    auto d1 = transfeat::augment(records);
    auto graph = kg::build_graph(train, kg::EdgeConfig{});
    kg::WalkParams wp;
    wp.walk_length = 20;
    wp.walks_per_node = 5;
    wp.seed = util::derive_seed(seed, "acc9.walk");
    auto walks = kg::generate_walks(graph, wp);
    embedding::SgnsParams sp;
    sp.dimension = 16;
    sp.epochs = 1;
    sp.seed = util::derive_seed(seed, "acc9.sgns");
    auto table = embedding::train_embeddings(graph, walks, sp);
    auto d2 = embedding::embed_block(table, records);
    auto lexicon = sentiment::hash_lexicon(5000, util::derive_seed(seed, "acc9.lex"));
    auto d3 = sentiment::sentiment_block(
        records, sentiment::lexicon_provider(lexicon, {"L0"}));
    std::vector<std::vector<std::uint32_t>> corpus;
    corpus.reserve(train.size());
    for (const auto& r : train) corpus.push_back(r.text_tokens);
    auto vocab = content::TfidfVocabulary::fit(corpus, 4096, 2);
    content::LinearParams lp;
    lp.epochs = 5;
    lp.seed = util::derive_seed(seed, "acc9.linear");
    auto models = content::train_content_models(vocab, train, lp);
    auto d4 = content::content_block(vocab, models, records);

    gbdt::Hyperparams hp;
    hp.n_trees = 20;
    hp.max_depth = 3;
    hp.eta = 0.3;
    hp.seed = util::derive_seed(seed, "acc9.gbdt");
    auto result = ensemble::ablate(records, {&d1, &d2, &d3, &d4},
                                   EngagementType::Like, hp, split);
    bests.push_back(ensemble::mask_to_string(result.best_mask));
    if ((result.best_mask & 0b0001) == 0)
      return {false, "seed " + std::to_string(seed) + " picked " + bests.back() +
                         " without D1"};
  }
  std::string all;
  for (const auto& b : bests) all += (all.empty() ? "" : ", ") + b;
  return {true, "best subsets " + all + fmt(" in %.0fs", elapsed_s(start))};
}

int run_cli(const std::string& base, const std::string& args) {
  std::string cmd = std::string(ENGPRED_CLI_PATH) + " " + args + " >> " + base +
                    "/cli_log.txt 2>&1";
  int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

// every subcommand twice; the artifact tree must not change
Outcome check_determinism() {
  auto start = std::chrono::steady_clock::now();
  auto dir = fs::temp_directory_path() / "engpred_acc_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string base = dir.string();

  util::write_file(base + "/gen_log.json",
                   R"({"n_users": 80, "n_tweets": 150, "n_records": 500,
  "base_rates": {"reply": 0.3, "retweet": 0.3, "quote": 0.25, "like": 0.4},
  "seed": 7})");
  util::write_file(base + "/gen_hold.json",
                   R"({"n_users": 30, "n_tweets": 30, "n_records": 60,
  "base_rates": {"reply": 0.3, "retweet": 0.3, "quote": 0.25, "like": 0.4},
  "seed": 8})");
  util::write_file(base + "/cfg.json", std::string(R"({
  "input": ")") + base + R"(/input.tsv",
  "workdir": ")" + base + R"(/work",
  "holdout": ")" + base + R"(/holdout.tsv",
  "stage1_sample_size": 400,
  "stage2_fraction": 0.6,
  "preset": 2,
  "gbdt": {"n_trees": 8, "max_depth": 2},
  "walk": {"walk_length": 8, "walks_per_node": 2},
  "sgns": {"dimension": 8, "epochs": 1},
  "vocab": {"max_features": 200, "min_df": 1}
})");

  const std::string cfg = " --config " + base + "/cfg.json ";
  const std::vector<std::string> commands = {
      "generate --out " + base + "/input.tsv --gen-config " + base + "/gen_log.json",
      "generate --out " + base + "/holdout.tsv --gen-config " + base + "/gen_hold.json",
      cfg + "stats --json " + base + "/stats.json",
      cfg + "kg-build",
      cfg + "kg-embed",
      cfg + "sentiment",
      cfg + "tfidf",
      cfg + "features --groups d1,d2,d3,d4",
      cfg + "train",
      cfg + "model 1",
      cfg + "stage 1",
      cfg + "stage 2",
      cfg + "stage 3",
      cfg + "predict --out " + base + "/scored.tsv",
      cfg + "evaluate --predictions " + base + "/scored.tsv --json " + base + "/eval.json",
      cfg + "ablate --engagement like",
      cfg + "gridsearch --engagement like --param max_depth=1,2",
  };
  auto run_all = [&]() -> std::string {
    for (const auto& c : commands)
      if (int rc = run_cli(base, c); rc != 0)
        return "exit " + std::to_string(rc) + " from: " + c;
    return "";
  };
  auto snapshot = [&]() {
    std::map<std::string, std::uint64_t> hashes;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      auto rel = fs::relative(entry.path(), dir).string();
      if (rel == "cli_log.txt") continue;  // accumulates across passes
      hashes[rel] = util::hash_file(entry.path().string());
    }
    return hashes;
  };

  if (auto err = run_all(); !err.empty()) return {false, "first pass: " + err};
  auto first = snapshot();
  if (auto err = run_all(); !err.empty()) return {false, "second pass: " + err};
  auto second = snapshot();

  if (first.size() != second.size())
    return {false, fmt("artifact count changed: %.0f vs %.0f",
                       static_cast<double>(first.size()),
                       static_cast<double>(second.size()))};
  for (const auto& [rel, hash] : first) {
    auto it = second.find(rel);
    if (it == second.end()) return {false, "artifact disappeared: " + rel};
    if (it->second != hash) return {false, "artifact changed: " + rel};
  }
  return {true, fmt("%.0f artifacts bit-identical across reruns of all "
                    "subcommands in %.0fs",
                    static_cast<double>(first.size()), elapsed_s(start))};
}

struct Criterion {
  const char* label;
  Outcome (*fn)();
};

const Criterion kCriteria[] = {
    {"counter parity with the quadratic reference", check_counters},
    {"metric oracles", check_metric_oracles},
    {"follower-class boundaries", check_follower_classes},
    {"embedding clique separation", check_embedding_separation},
    {"walk bias", check_walk_bias},
    {"booster agreement and fit", check_booster},
    {"tf-idf fixture and determinism", check_tfidf},
    {"planted hashtag signal", check_planted_signal},
    {"ablation keeps counters", check_ablation_affinity},
    {"subcommand determinism", check_determinism},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > 10) {
      std::fprintf(stderr, "usage: %s [1..10]\n", argv[0]);
      return 2;
    }
  }
  bool all_pass = true;
  for (int i = 1; i <= 10; ++i) {
    if (only != 0 && i != only) continue;
    Outcome out;
    try {
      out = kCriteria[i - 1].fn();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d: %s  %s (%s)\n", i, out.pass ? "PASS" : "FAIL",
                kCriteria[i - 1].label, out.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && out.pass;
  }
  return all_pass ? 0 : 1;
}
