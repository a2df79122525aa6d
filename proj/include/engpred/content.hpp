#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "engpred/feature_block.hpp"
#include "engpred/types.hpp"

namespace engpred::content {

// Token-id n-gram, n in {1,2,3}. Slots hold token+1 so 0 marks an unused
// slot; array comparison then orders unigrams before their extensions.
using Ngram = std::array<std::uint64_t, 3>;

Ngram make_ngram(std::initializer_list<std::uint64_t> tokens);

struct NgramHash {
  std::size_t operator()(const Ngram& g) const;
};

// Sorted (column, value) pairs, strictly increasing columns, values finite
// and non-zero. Column space is the owning vocabulary's [0, size).
struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  bool empty() const { return entries.empty(); }
  bool operator==(const SparseVector&) const = default;
};

double dot(const SparseVector& a, const std::vector<double>& dense);

inline constexpr std::size_t kDefaultMaxFeatures = std::size_t{1} << 18;
inline constexpr std::uint32_t kDefaultMinDf = 2;

class TfidfVocabulary {
 public:
  // Keeps n-grams with document frequency >= min_df, the top max_features of
  // them by (df desc, lexicographic asc). Column order is lexicographic.
  // idf = ln((1+N)/(1+df)) + 1 over the N fitting documents.
  static TfidfVocabulary fit(const std::vector<std::vector<std::uint32_t>>& corpus,
                             std::size_t max_features = kDefaultMaxFeatures,
                             std::uint32_t min_df = kDefaultMinDf);

  std::size_t size() const { return entries_.size(); }
  const Ngram& ngram(std::size_t col) const { return entries_[col].first; }
  double idf(std::size_t col) const { return entries_[col].second; }
  // -1 when absent
  std::int64_t find(const Ngram& g) const;

  // count x idf per matched n-gram, L2-normalized; all-out-of-vocabulary
  // documents give an empty vector.
  SparseVector transform(const std::vector<std::uint32_t>& tokens) const;

  void save(const std::string& path) const;
  static TfidfVocabulary load(const std::string& path);

  bool operator==(const TfidfVocabulary& other) const {
    return entries_ == other.entries_;
  }

 private:
  std::vector<std::pair<Ngram, double>> entries_;  // lex order, value = idf
  std::unordered_map<Ngram, std::uint32_t, NgramHash> index_;

  void rebuild_index();
};

enum class LossKind { Hinge, Logistic };

std::string_view to_string(LossKind loss);
LossKind loss_from_string(std::string_view text);

struct LinearParams {
  LossKind loss = LossKind::Hinge;
  double l2 = 1e-4;
  int epochs = 10;
  std::uint64_t seed = 1;
  // held out from weight training, used to fit the probability calibration
  double calibration_fraction = 0.1;
};

struct LinearModel {
  std::uint32_t dim = 0;
  std::vector<double> weights;  // dense, size dim
  double bias = 0;
  // probability = sigmoid(cal_a * margin + cal_b)
  double cal_a = 1;
  double cal_b = 0;

  double margin(const SparseVector& x) const { return dot(x, weights) + bias; }

  bool operator==(const LinearModel&) const = default;
};

// Primal stochastic subgradient with learning rate 1/(l2 * t), decaying
// weights each step and leaving the bias unregularized. Labels are 0/1.
// A seeded calibration_fraction of the input is held out from weight
// training and fits (cal_a, cal_b) by Newton iteration on the margins.
LinearModel train_linear(const std::vector<SparseVector>& X,
                         const std::vector<int>& y, std::uint32_t dim,
                         const LinearParams& params);

// sigmoid(cal_a * margin + cal_b), kept inside (0, 1)
double predict_score(const LinearModel& model, const SparseVector& x);

std::string models_to_json(const std::array<LinearModel, kNumEngagementTypes>& models);
std::array<LinearModel, kNumEngagementTypes> models_from_json(const std::string& text);

// One model per engagement type, trained on the records' token n-grams.
std::array<LinearModel, kNumEngagementTypes> train_content_models(
    const TfidfVocabulary& vocab, const std::vector<EngagementRecord>& records,
    const LinearParams& params);

// Columns d4.score_reply, d4.score_retweet, d4.score_quote, d4.score_like.
FeatureBlock content_block(const TfidfVocabulary& vocab,
                           const std::array<LinearModel, kNumEngagementTypes>& models,
                           const std::vector<EngagementRecord>& records);

}  // namespace engpred::content
