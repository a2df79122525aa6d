#include "engpred/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <doctest.h>

#include "engpred/errors.hpp"
#include "engpred/feature_matrix.hpp"
#include "engpred/util.hpp"

using namespace engpred;

namespace {

constexpr auto kLike = EngagementType::Like;
constexpr std::size_t kLikeIdx = static_cast<std::size_t>(kLike);

double nan_v() { return std::numeric_limits<double>::quiet_NaN(); }

FeatureMatrix make_matrix(std::vector<std::string> names,
                          std::vector<std::vector<double>> columns,
                          std::vector<int> like_labels) {
  FeatureMatrix m;
  m.rows = like_labels.size();
  m.names = std::move(names);
  m.columns = std::move(columns);
  m.labels[kLikeIdx] = std::move(like_labels);
  return m;
}

// Four rows, one feature, perfectly separable at 0.5.
FeatureMatrix stump_data() {
  return make_matrix({"x"}, {{0.0, 0.0, 1.0, 1.0}}, {0, 0, 1, 1});
}

gbdt::Hyperparams stump_params() {
  gbdt::Hyperparams hp;
  hp.n_trees = 1;
  hp.max_depth = 1;
  hp.eta = 1.0;
  hp.l2_lambda = 1.0;
  hp.min_child_weight = 0.0;
  hp.subsample = 1.0;
  hp.colsample = 1.0;
  return hp;
}

// Quantized values so ties and repeated thresholds occur; labels follow the
// first feature plus noise so trees have signal to find.
FeatureMatrix random_matrix(std::size_t rows, std::size_t cols,
                            std::uint64_t seed, double nan_frac) {
  util::Rng rng(seed);
  FeatureMatrix m;
  m.rows = rows;
  std::vector<int> y(rows, 0);
  for (std::size_t c = 0; c < cols; ++c) {
    m.names.push_back("f" + std::to_string(c));
    std::vector<double> col(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      if (rng.uniform01() < nan_frac) {
        col[r] = nan_v();
      } else {
        col[r] = std::floor(rng.uniform01() * 16.0) / 4.0;
      }
    }
    m.columns.push_back(std::move(col));
  }
  for (std::size_t r = 0; r < rows; ++r) {
    double v = std::isnan(m.columns[0][r]) ? 2.0 : m.columns[0][r];
    y[r] = (v + rng.uniform01() * 3.0 > 3.5) ? 1 : 0;
  }
  // Both classes must appear for training to start.
  y[0] = 0;
  y[rows - 1] = 1;
  m.labels[kLikeIdx] = std::move(y);
  return m;
}

}  // namespace

TEST_CASE("hyperparameter validation rejects out-of-range values") {
  gbdt::Hyperparams hp;
  CHECK_NOTHROW(hp.validate());

  auto bad = [](auto&& mutate) {
    gbdt::Hyperparams h;
    mutate(h);
    CHECK_THROWS_AS(h.validate(), UsageError);
  };
  bad([](auto& h) { h.n_trees = 0; });
  bad([](auto& h) { h.max_depth = 0; });
  bad([](auto& h) { h.eta = 0.0; });
  bad([](auto& h) { h.eta = 1.5; });
  bad([](auto& h) { h.l2_lambda = -1.0; });
  bad([](auto& h) { h.min_child_weight = -0.5; });
  bad([](auto& h) { h.subsample = 0.0; });
  bad([](auto& h) { h.subsample = 1.01; });
  bad([](auto& h) { h.colsample = 0.0; });
  bad([](auto& h) { h.min_split_gain = -1e-9; });
  bad([](auto& h) { h.early_stop_patience = 0; });
  bad([](auto& h) { h.histogram_bins = 1; });
  bad([](auto& h) { h.histogram_bins = -2; });
  bad([](auto& h) { h.threads = 0; });
}

TEST_CASE("hyperparameters survive a JSON round trip") {
  gbdt::Hyperparams hp;
  hp.n_trees = 37;
  hp.max_depth = 4;
  hp.eta = 0.05;
  hp.l2_lambda = 2.5;
  hp.min_child_weight = 0.25;
  hp.subsample = 0.9;
  hp.colsample = 0.7;
  hp.min_split_gain = 1e-6;
  hp.early_stop_patience = 7;
  hp.histogram_bins = 64;
  hp.threads = 2;
  hp.seed = 99;
  auto back = gbdt::hyperparams_from_json(gbdt::hyperparams_to_json(hp));
  CHECK(back == hp);

  CHECK_THROWS_AS(gbdt::hyperparams_from_json("not json"), DataError);
  CHECK_THROWS_AS(gbdt::hyperparams_from_json(R"({"n_trees": "many"})"), DataError);
}

TEST_CASE("depth-1 tree on separable data recovers the hand-worked stump") {
  // base_score = logit(0.5) = 0, so g = (0.5, 0.5, -0.5, -0.5) and h = 0.25
  // per row. Split at 0.5: GL = 1, HL = 0.5, GR = -1, HR = 0.5, lambda = 1.
  // gain = 0.5 * (1/1.5 + 1/1.5 - 0) = 2/3; leaves -2/3 and +2/3.
  auto data = stump_data();
  auto model = gbdt::train(data, kLike, stump_params());

  CHECK(model.base_score == 0.0);
  REQUIRE(model.trees.size() == 1);
  const auto& nodes = model.trees[0].nodes;
  REQUIRE(nodes.size() == 3);
  CHECK(nodes[0].feature == 0);
  CHECK(nodes[0].threshold == 0.5);
  CHECK(nodes[0].default_left);
  const auto& left = nodes[static_cast<std::size_t>(nodes[0].left)];
  const auto& right = nodes[static_cast<std::size_t>(nodes[0].right)];
  REQUIRE(left.is_leaf());
  REQUIRE(right.is_leaf());
  CHECK(left.value == -2.0 / 3.0);
  CHECK(right.value == 2.0 / 3.0);

  auto scores = gbdt::predict(model, data);
  REQUIRE(scores.size() == 4);
  CHECK(scores[0] == scores[1]);
  CHECK(scores[2] == scores[3]);
  CHECK(scores[0] < 0.5);
  CHECK(scores[2] > 0.5);
  CHECK(scores[0] + scores[2] == doctest::Approx(1.0).epsilon(1e-12));

  auto ref = gbdt::train_reference(data, kLike, stump_params());
  CHECK(gbdt::models_equivalent(model, ref, 1e-12));
}

TEST_CASE("base score is the log-odds of the training rate") {
  // Constant features yield no split candidates, the gradient sum at the
  // calibrated base score is zero, so every prediction equals the rate.
  auto data = make_matrix({"c"}, {{7.0, 7.0, 7.0, 7.0}}, {1, 0, 0, 0});
  gbdt::Hyperparams hp = stump_params();
  hp.n_trees = 3;
  auto model = gbdt::train(data, kLike, hp);

  CHECK(model.base_score == doctest::Approx(std::log(0.25 / 0.75)).epsilon(1e-15));
  for (const auto& tree : model.trees) {
    REQUIRE(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].is_leaf());
  }
  for (double s : gbdt::predict(model, data)) {
    CHECK(s == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("min_child_weight and min_split_gain can each veto the stump split") {
  auto data = stump_data();

  SUBCASE("child hessian 0.5 below the default weight floor") {
    gbdt::Hyperparams hp = stump_params();
    hp.min_child_weight = 1.0;
    auto model = gbdt::train(data, kLike, hp);
    REQUIRE(model.trees.size() == 1);
    CHECK(model.trees[0].nodes.size() == 1);
  }
  SUBCASE("gain 2/3 below the gain floor") {
    gbdt::Hyperparams hp = stump_params();
    hp.min_split_gain = 0.7;
    auto model = gbdt::train(data, kLike, hp);
    CHECK(model.trees[0].nodes.size() == 1);
  }
  SUBCASE("gain 2/3 above a slightly lower floor") {
    gbdt::Hyperparams hp = stump_params();
    hp.min_split_gain = 0.6;
    auto model = gbdt::train(data, kLike, hp);
    CHECK(model.trees[0].nodes.size() == 3);
  }
}

TEST_CASE("missing values follow the learned default direction") {
  gbdt::Hyperparams hp = stump_params();

  SUBCASE("positive-heavy missing rows default right") {
    auto data = make_matrix(
        {"x"}, {{0, 0, 0, 0, 1, 1, 1, 1, nan_v(), nan_v(), nan_v(), nan_v()}},
        {0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1});
    auto model = gbdt::train(data, kLike, hp);
    REQUIRE(model.trees[0].nodes.size() == 3);
    CHECK(model.trees[0].nodes[0].feature == 0);
    CHECK_FALSE(model.trees[0].nodes[0].default_left);
    auto scores = gbdt::predict(model, data);
    CHECK(scores[8] == scores[4]);  // missing row lands on the right leaf
    CHECK(gbdt::models_equivalent(model, gbdt::train_reference(data, kLike, hp),
                                  1e-12));
  }
  SUBCASE("negative-heavy missing rows default left") {
    auto data = make_matrix(
        {"x"}, {{0, 0, 0, 0, 1, 1, 1, 1, nan_v(), nan_v(), nan_v(), nan_v()}},
        {0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0});
    auto model = gbdt::train(data, kLike, hp);
    REQUIRE(model.trees[0].nodes.size() == 3);
    CHECK(model.trees[0].nodes[0].default_left);
    auto scores = gbdt::predict(model, data);
    CHECK(scores[8] == scores[0]);
  }
}

TEST_CASE("level-wise and exhaustive trainers build identical models") {
  gbdt::Hyperparams hp;
  hp.n_trees = 5;
  hp.max_depth = 3;
  hp.eta = 0.3;
  hp.subsample = 1.0;
  hp.colsample = 1.0;

  SUBCASE("dense values") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      CAPTURE(seed);
      auto data = random_matrix(80 + 13 * seed, 4, seed, 0.0);
      auto fast = gbdt::train(data, kLike, hp);
      auto ref = gbdt::train_reference(data, kLike, hp);
      CHECK(gbdt::models_equivalent(fast, ref, 1e-9));
    }
  }
  SUBCASE("a quarter of the values missing") {
    for (std::uint64_t seed = 5; seed <= 8; ++seed) {
      CAPTURE(seed);
      auto data = random_matrix(70 + 11 * seed, 5, seed, 0.25);
      auto fast = gbdt::train(data, kLike, hp);
      auto ref = gbdt::train_reference(data, kLike, hp);
      CHECK(gbdt::models_equivalent(fast, ref, 1e-9));
    }
  }
  SUBCASE("row and column sampling draw the same masks") {
    hp.subsample = 0.7;
    hp.colsample = 0.6;
    hp.min_child_weight = 0.0;
    auto data = random_matrix(120, 5, 42, 0.1);
    auto fast = gbdt::train(data, kLike, hp);
    auto ref = gbdt::train_reference(data, kLike, hp);
    CHECK(gbdt::models_equivalent(fast, ref, 1e-9));
  }
}

TEST_CASE("split search results do not depend on the thread count") {
  gbdt::Hyperparams hp;
  hp.n_trees = 5;
  hp.max_depth = 4;
  hp.subsample = 1.0;
  hp.colsample = 0.8;
  auto data = random_matrix(150, 6, 61, 0.15);
  auto one = gbdt::train(data, kLike, hp);
  hp.threads = 4;
  auto four = gbdt::train(data, kLike, hp);
  hp.threads = 1;
  CHECK(one.to_json() == four.to_json());
}

TEST_CASE("histogram mode caps distinct thresholds and stays self-consistent") {
  gbdt::Hyperparams hp;
  hp.n_trees = 4;
  hp.max_depth = 3;
  hp.eta = 0.3;
  hp.subsample = 1.0;
  hp.colsample = 1.0;
  hp.histogram_bins = 8;

  // Continuous values, far more distinct levels than bins.
  util::Rng rng(71);
  FeatureMatrix m;
  m.rows = 300;
  m.names = {"u"};
  m.columns.assign(1, std::vector<double>(m.rows));
  std::vector<int> y(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    m.columns[0][i] = rng.uniform01();
    y[i] = (m.columns[0][i] + rng.uniform01() > 1.1) ? 1 : 0;
  }
  y[0] = 0;
  y[1] = 1;
  m.labels[kLikeIdx] = y;

  auto model = gbdt::train(m, kLike, hp);
  std::vector<double> thresholds;
  for (const auto& tree : model.trees)
    for (const auto& node : tree.nodes)
      if (!node.is_leaf()) thresholds.push_back(node.threshold);
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  CHECK(!thresholds.empty());
  CHECK(thresholds.size() <= 7);  // at most bins - 1 boundaries per feature

  auto ref = gbdt::train_reference(m, kLike, hp);
  CHECK(gbdt::models_equivalent(model, ref, 1e-9));

  // The planted signal still comes through on the bucketed values.
  auto scores = gbdt::predict(model, m);
  double lo = 0, hi = 0;
  std::size_t nlo = 0, nhi = 0;
  for (std::size_t i = 0; i < m.rows; ++i) {
    if (m.columns[0][i] < 0.3) {
      lo += scores[i];
      ++nlo;
    } else if (m.columns[0][i] > 0.7) {
      hi += scores[i];
      ++nhi;
    }
  }
  REQUIRE(nlo > 0);
  REQUIRE(nhi > 0);
  CHECK(hi / nhi > lo / nlo + 0.2);
}

TEST_CASE("training logloss never increases at full sampling") {
  gbdt::Hyperparams hp;
  hp.n_trees = 40;
  hp.max_depth = 3;
  hp.eta = 0.1;
  hp.subsample = 1.0;
  hp.colsample = 1.0;
  auto data = random_matrix(150, 4, 7, 0.1);
  auto model = gbdt::train(data, kLike, hp);
  REQUIRE(model.train_logloss.size() == 40);
  for (std::size_t i = 1; i < model.train_logloss.size(); ++i) {
    CHECK(model.train_logloss[i] <= model.train_logloss[i - 1] + 1e-12);
  }
}

TEST_CASE("early stopping truncates to the best validation round") {
  gbdt::Hyperparams hp;
  hp.n_trees = 100;
  hp.max_depth = 3;
  hp.eta = 0.3;
  hp.subsample = 1.0;
  hp.colsample = 1.0;
  hp.early_stop_patience = 5;

  // Validation labels are independent noise, so the validation loss starts
  // rising once the trees memorize the training set.
  auto train = random_matrix(60, 3, 11, 0.0);
  auto valid = random_matrix(60, 3, 12, 0.0);
  util::Rng rng(13);
  for (auto& v : valid.labels[kLikeIdx]) v = rng.bernoulli(0.5) ? 1 : 0;
  valid.labels[kLikeIdx][0] = 0;
  valid.labels[kLikeIdx][1] = 1;

  auto model = gbdt::train(train, kLike, hp, &valid);
  CHECK(model.valid_logloss.size() < 100);
  REQUIRE(model.best_iteration >= 0);
  CHECK(model.trees.size() == static_cast<std::size_t>(model.best_iteration) + 1);
  auto best = std::min_element(model.valid_logloss.begin(), model.valid_logloss.end());
  CHECK(model.best_iteration == best - model.valid_logloss.begin());

  SUBCASE("no validation set keeps every round") {
    auto plain = gbdt::train(train, kLike, hp);
    CHECK(plain.trees.size() == 100);
    CHECK(plain.best_iteration == 99);
    CHECK(plain.valid_logloss.empty());
  }
  SUBCASE("validation columns must match") {
    FeatureMatrix other = valid;
    other.names[0] = "different";
    CHECK_THROWS_AS(gbdt::train(train, kLike, hp, &other), DataError);
  }
}

TEST_CASE("training rejects malformed inputs") {
  gbdt::Hyperparams hp = stump_params();

  auto empty_rows = make_matrix({"x"}, {{}}, {});
  CHECK_THROWS_AS(gbdt::train(empty_rows, kLike, hp), DataError);

  FeatureMatrix no_cols;
  no_cols.rows = 2;
  no_cols.labels[kLikeIdx] = {0, 1};
  CHECK_THROWS_AS(gbdt::train(no_cols, kLike, hp), DataError);

  auto single_class = make_matrix({"x"}, {{0, 1, 2}}, {1, 1, 1});
  CHECK_THROWS_AS(gbdt::train(single_class, kLike, hp), DataError);

  auto bad_label = make_matrix({"x"}, {{0, 1, 2}}, {0, 1, 2});
  CHECK_THROWS_AS(gbdt::train(bad_label, kLike, hp), DataError);

  auto inf_value = make_matrix(
      {"x"}, {{0, std::numeric_limits<double>::infinity(), 2}}, {0, 1, 0});
  CHECK_THROWS_AS(gbdt::train(inf_value, kLike, hp), DataError);

  auto misaligned = make_matrix({"x"}, {{0, 1}}, {0, 1, 0});
  CHECK_THROWS_AS(gbdt::train(misaligned, kLike, hp), DataError);
}

TEST_CASE("prediction matches features by name") {
  gbdt::Hyperparams hp;
  hp.n_trees = 4;
  hp.max_depth = 3;
  hp.subsample = 1.0;
  hp.colsample = 1.0;
  auto data = random_matrix(90, 3, 21, 0.1);
  auto model = gbdt::train(data, kLike, hp);
  auto direct = gbdt::predict(model, data);

  SUBCASE("column order does not matter") {
    auto shuffled = data.select_columns({2, 0, 1});
    auto scores = gbdt::predict(model, shuffled);
    CHECK(scores == direct);
  }
  SUBCASE("a missing column is an error") {
    auto narrowed = data.select_columns({0, 1});
    CHECK_THROWS_WITH_AS(gbdt::predict(model, narrowed),
                         "matrix lacks model feature f2", DataError);
  }
}

TEST_CASE("models survive JSON and file round trips") {
  gbdt::Hyperparams hp;
  hp.n_trees = 3;
  hp.max_depth = 3;
  hp.subsample = 1.0;
  hp.colsample = 1.0;
  auto data = random_matrix(80, 4, 31, 0.2);
  auto model = gbdt::train(data, kLike, hp);

  auto text = model.to_json();
  auto back = gbdt::Model::from_json(text);
  CHECK(back.feature_names == model.feature_names);
  CHECK(back.base_score == model.base_score);
  CHECK(back.best_iteration == model.best_iteration);
  REQUIRE(back.trees.size() == model.trees.size());
  for (std::size_t t = 0; t < back.trees.size(); ++t) {
    CHECK(back.trees[t].nodes == model.trees[t].nodes);
  }
  CHECK(back.to_json() == text);

  auto path = (std::filesystem::temp_directory_path() / "gbdt_model.json").string();
  model.save(path);
  auto loaded = gbdt::Model::load(path);
  CHECK(loaded.to_json() == text);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(gbdt::Model::from_json("nope"), DataError);
  CHECK_THROWS_AS(gbdt::Model::from_json(R"({"base_score": 0})"), DataError);
}

TEST_CASE("training is deterministic in the seed") {
  gbdt::Hyperparams hp;
  hp.n_trees = 6;
  hp.max_depth = 3;
  hp.subsample = 0.7;
  hp.colsample = 0.7;
  auto data = random_matrix(100, 4, 51, 0.1);

  auto a = gbdt::train(data, kLike, hp);
  auto b = gbdt::train(data, kLike, hp);
  CHECK(a.to_json() == b.to_json());

  hp.seed = 2;
  auto c = gbdt::train(data, kLike, hp);
  CHECK(a.to_json() != c.to_json());
}

TEST_CASE("tree equivalence tolerates leaf noise but not structure changes") {
  auto data = stump_data();
  auto model = gbdt::train(data, kLike, stump_params());

  gbdt::Model shifted = model;
  auto& nodes = shifted.trees[0].nodes;
  nodes[static_cast<std::size_t>(nodes[0].left)].value += 5e-10;
  CHECK(gbdt::models_equivalent(model, shifted, 1e-9));
  CHECK_FALSE(gbdt::models_equivalent(model, shifted, 1e-12));

  gbdt::Model restructured = model;
  restructured.trees[0].nodes[0].threshold = 0.75;
  CHECK_FALSE(gbdt::models_equivalent(model, restructured, 1e-9));

  gbdt::Model fewer = model;
  fewer.trees.clear();
  CHECK_FALSE(gbdt::models_equivalent(model, fewer, 1e-9));
}

TEST_CASE("curve files hold one indexed value per round") {
  auto path = (std::filesystem::temp_directory_path() / "curve.csv").string();
  gbdt::write_curve_csv(path, "round,logloss", {0.5, 0.25});
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == "round,logloss\n0,0.5\n1,0.25\n");
  std::filesystem::remove(path);
}
