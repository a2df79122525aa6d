#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "engpred/feature_matrix.hpp"
#include "engpred/types.hpp"

namespace engpred::gbdt {

struct Hyperparams {
  int n_trees = 200;
  int max_depth = 6;
  double eta = 0.1;
  double l2_lambda = 1.0;
  double min_child_weight = 1.0;
  double subsample = 0.8;
  double colsample = 0.8;
  double min_split_gain = 1e-9;
  int early_stop_patience = 20;
  // 0 trains on exact values; >= 2 buckets each feature into at most that
  // many quantile bins before training. Thresholds stay in the value domain.
  int histogram_bins = 0;
  int threads = 1;  // split-search parallelism; results are thread-count invariant
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const Hyperparams&) const = default;
};

std::string hyperparams_to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(const std::string& text);

// feature == -1 marks a leaf holding `value` (already eta-scaled)
struct TreeNode {
  int feature = -1;
  double threshold = 0;
  bool default_left = true;
  int left = -1;
  int right = -1;
  double value = 0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // root at index 0

  // row accessor: columns are the model's feature order
  double predict_row(const std::vector<const double*>& feature_ptrs,
                     std::size_t row) const;
};

struct Model {
  std::vector<std::string> feature_names;
  double base_score = 0;  // log-odds
  std::vector<Tree> trees;
  std::vector<double> train_logloss;  // one entry per built round
  std::vector<double> valid_logloss;  // empty without a validation set
  int best_iteration = -1;            // rounds kept after early stopping

  std::string to_json() const;
  static Model from_json(const std::string& text);
  void save(const std::string& path) const;
  static Model load(const std::string& path);
};

// Second-order boosting with logistic loss. Gradients g = p - y, hessians
// h = p(1-p); split gain 0.5 * [GL^2/(HL+lambda) + GR^2/(HR+lambda)
// - G^2/(H+lambda)], leaf weight -G/(H+lambda) scaled by eta. Missing values
// follow a learned default direction (both tried, higher gain kept; nodes
// without missing rows default left). Split candidates are midpoints between
// consecutive distinct values; rows with value < threshold go left. Gains
// within 1e-9 (relative) tie, broken by smaller feature index, then smaller
// threshold, then default-left. base_score is the log-odds of the training
// positive rate. With a validation matrix, training stops after
// early_stop_patience rounds without a logloss improvement and the model is
// truncated to the best round. histogram_bins > 0 trains on quantile-bucketed
// values; validation and later prediction always read raw values.
Model train(const FeatureMatrix& data, EngagementType engagement,
            const Hyperparams& hp, const FeatureMatrix* valid = nullptr);

// Exhaustive recursive trainer used to cross-check `train`; same contracts,
// independent split search.
Model train_reference(const FeatureMatrix& data, EngagementType engagement,
                      const Hyperparams& hp);

// sigmoid(base_score + sum of tree outputs); matches model features to
// matrix columns by name and fails on absent ones.
std::vector<double> predict(const Model& model, const FeatureMatrix& data);

// Structural equality: same splits and default directions, leaf values equal
// within tol. Node numbering may differ.
bool trees_equivalent(const Tree& a, const Tree& b, double tol);
bool models_equivalent(const Model& a, const Model& b, double tol);

void write_curve_csv(const std::string& path, const std::string& header,
                     const std::vector<double>& values);

}  // namespace engpred::gbdt
