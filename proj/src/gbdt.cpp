#include "engpred/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "engpred/errors.hpp"
#include "engpred/util.hpp"

namespace engpred::gbdt {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double mean_logloss(const std::vector<double>& margins, const std::vector<int>& y) {
  double sum = 0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    double p = sigmoid(margins[i]);
    p = std::min(1.0 - 1e-15, std::max(1e-15, p));
    sum += y[i] ? -std::log(p) : -std::log(1.0 - p);
  }
  return sum / static_cast<double>(margins.size());
}

struct GH {
  double g = 0, h = 0;
};

struct SplitCand {
  double gain = 0;
  int feature = -1;  // -1 marks "no candidate"
  double threshold = 0;
  bool default_left = true;
};

// Canonical candidate order: higher gain wins outside a relative 1e-9 band;
// inside it the smaller feature, then smaller threshold, then default-left
// candidate wins.
bool better(const SplitCand& a, const SplitCand& b) {
  if (b.feature < 0) return a.feature >= 0;
  if (a.feature < 0) return false;
  double tol = 1e-9 * std::max({1.0, std::fabs(a.gain), std::fabs(b.gain)});
  if (a.gain > b.gain + tol) return true;
  if (b.gain > a.gain + tol) return false;
  if (a.feature != b.feature) return a.feature < b.feature;
  if (a.threshold != b.threshold) return a.threshold < b.threshold;
  return a.default_left && !b.default_left;
}

// drawn per round, rows first, then columns; both trainers share the stream
void sample_masks(std::size_t n_rows, std::size_t n_cols, const Hyperparams& hp,
                  int round, std::vector<char>& row_mask,
                  std::vector<char>& col_mask) {
  util::Rng rng(util::derive_seed(hp.seed, "gbdt.round",
                                  static_cast<std::uint64_t>(round)));
  row_mask.assign(n_rows, 0);
  for (auto& m : row_mask) m = rng.bernoulli(hp.subsample) ? 1 : 0;
  col_mask.assign(n_cols, 0);
  for (auto& m : col_mask) m = rng.bernoulli(hp.colsample) ? 1 : 0;
}

const std::vector<int>& checked_labels(const FeatureMatrix& data,
                                       EngagementType engagement) {
  const auto& y = data.labels_for(engagement);
  if (y.size() != data.rows)
    throw DataError("label vector does not align with the feature matrix");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw DataError("labels must be 0 or 1");
    (v ? pos : neg) = true;
  }
  if (!pos || !neg) throw DataError("training labels are single-class");
  return y;
}

void check_features(const FeatureMatrix& data) {
  if (data.rows == 0) throw DataError("feature matrix has no rows");
  if (data.n_cols() == 0) throw DataError("feature matrix has no columns");
  for (std::size_t c = 0; c < data.n_cols(); ++c) {
    if (data.columns[c].size() != data.rows)
      throw DataError("column " + data.names[c] + " does not align with the matrix");
    for (double v : data.columns[c])
      if (!std::isfinite(v) && !std::isnan(v))
        throw DataError("non-finite value in feature " + data.names[c]);
  }
}

// Rounds every value up to its quantile-bin representative so at most `bins`
// distinct values remain per column. Representatives are actual data values,
// which keeps split thresholds inside the value domain. Missing cells pass
// through.
FeatureMatrix quantize_columns(const FeatureMatrix& data, int bins) {
  FeatureMatrix out = data;
  const auto b = static_cast<std::size_t>(bins);
  for (auto& col : out.columns) {
    std::vector<double> vals;
    vals.reserve(col.size());
    for (double v : col)
      if (!std::isnan(v)) vals.push_back(v);
    std::sort(vals.begin(), vals.end());
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < vals.size(); ++i)
      if (i == 0 || vals[i] != vals[i - 1]) ++distinct;
    if (distinct <= b) continue;
    std::vector<double> reps;
    reps.reserve(b);
    for (std::size_t k = 1; k <= b; ++k) {
      double r = vals[vals.size() * k / b - 1];
      if (reps.empty() || r > reps.back()) reps.push_back(r);
    }
    for (double& v : col) {
      if (std::isnan(v)) continue;
      v = *std::lower_bound(reps.begin(), reps.end(), v);
    }
  }
  return out;
}

std::vector<std::vector<std::uint32_t>> presort_columns(const FeatureMatrix& data) {
  std::vector<std::vector<std::uint32_t>> sorted(data.n_cols());
  for (std::size_t c = 0; c < data.n_cols(); ++c) {
    const auto& col = data.columns[c];
    auto& idx = sorted[c];
    idx.reserve(data.rows);
    for (std::uint32_t r = 0; r < data.rows; ++r)
      if (!std::isnan(col[r])) idx.push_back(r);
    std::sort(idx.begin(), idx.end(), [&col](std::uint32_t a, std::uint32_t b) {
      if (col[a] != col[b]) return col[a] < col[b];
      return a < b;
    });
  }
  return sorted;
}

// Level-wise exact greedy builder over presorted columns. Children of the
// level's nodes are appended contiguously, so each level is an id range.
Tree build_tree_levelwise(const FeatureMatrix& data, const std::vector<double>& g,
                          const std::vector<double>& h,
                          const std::vector<char>& row_mask,
                          const std::vector<char>& col_mask, const Hyperparams& hp,
                          const std::vector<std::vector<std::uint32_t>>& sorted) {
  const std::size_t n = data.rows;
  const std::size_t m = data.n_cols();
  Tree tree;
  tree.nodes.emplace_back();
  std::vector<int> row_node(n, -1);
  for (std::size_t r = 0; r < n; ++r)
    if (row_mask[r]) row_node[r] = 0;

  int level_begin = 0;
  int level_end = 1;
  for (int depth = 0; level_begin < level_end; ++depth) {
    const auto n_active = static_cast<std::size_t>(level_end - level_begin);
    std::vector<GH> total(n_active);
    std::vector<std::size_t> count(n_active, 0);
    for (std::size_t r = 0; r < n; ++r) {
      int k = row_node[r];
      if (k < level_begin) continue;
      auto s = static_cast<std::size_t>(k - level_begin);
      total[s].g += g[r];
      total[s].h += h[r];
      ++count[s];
    }

    std::vector<SplitCand> best(n_active);
    if (depth < hp.max_depth) {
      std::vector<std::size_t> active_cols;
      active_cols.reserve(m);
      for (std::size_t c = 0; c < m; ++c)
        if (col_mask[c]) active_cols.push_back(c);
      std::vector<std::vector<SplitCand>> per_col(active_cols.size());
      util::parallel_for(active_cols.size(), hp.threads, [&](std::size_t ci) {
        const std::size_t c = active_cols[ci];
        const auto& col = data.columns[c];
        auto& col_best = per_col[ci];
        col_best.assign(n_active, SplitCand{});
        std::vector<GH> nonmiss(n_active), prefix(n_active);
        std::vector<std::size_t> nonmiss_count(n_active, 0), seen(n_active, 0);
        std::vector<double> last_v(n_active);
        for (std::uint32_t r : sorted[c]) {
          int k = row_node[r];
          if (k < level_begin) continue;
          auto s = static_cast<std::size_t>(k - level_begin);
          nonmiss[s].g += g[r];
          nonmiss[s].h += h[r];
          ++nonmiss_count[s];
        }
        for (std::uint32_t r : sorted[c]) {
          int k = row_node[r];
          if (k < level_begin) continue;
          auto s = static_cast<std::size_t>(k - level_begin);
          double v = col[r];
          if (seen[s] > 0 && v != last_v[s]) {
            double thr = last_v[s] + (v - last_v[s]) * 0.5;
            if (thr > last_v[s] && thr <= v) {
              bool has_missing = nonmiss_count[s] < count[s];
              GH miss{total[s].g - nonmiss[s].g, total[s].h - nonmiss[s].h};
              auto consider = [&](GH L, bool default_left) {
                GH R{total[s].g - L.g, total[s].h - L.h};
                if (L.h < hp.min_child_weight || R.h < hp.min_child_weight) return;
                double gain = 0.5 * (L.g * L.g / (L.h + hp.l2_lambda) +
                                     R.g * R.g / (R.h + hp.l2_lambda) -
                                     total[s].g * total[s].g /
                                         (total[s].h + hp.l2_lambda));
                SplitCand cand{gain, static_cast<int>(c), thr, default_left};
                if (better(cand, col_best[s])) col_best[s] = cand;
              };
              if (has_missing) {
                consider(prefix[s], false);
                consider(GH{prefix[s].g + miss.g, prefix[s].h + miss.h}, true);
              } else {
                consider(prefix[s], true);
              }
            }
          }
          prefix[s].g += g[r];
          prefix[s].h += h[r];
          ++seen[s];
          last_v[s] = v;
        }
      });
      // Ascending-feature merge keeps the winner independent of the thread
      // count.
      for (const auto& col_best : per_col)
        for (std::size_t s = 0; s < n_active; ++s)
          if (better(col_best[s], best[s])) best[s] = col_best[s];
    }

    for (std::size_t s = 0; s < n_active; ++s) {
      auto& node = tree.nodes[static_cast<std::size_t>(level_begin) + s];
      if (best[s].feature >= 0 && best[s].gain >= hp.min_split_gain) {
        node.feature = best[s].feature;
        node.threshold = best[s].threshold;
        node.default_left = best[s].default_left;
        node.left = static_cast<int>(tree.nodes.size());
        node.right = node.left + 1;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
      } else {
        node.feature = -1;
        node.value = -total[s].g / (total[s].h + hp.l2_lambda) * hp.eta;
      }
    }

    for (std::size_t r = 0; r < n; ++r) {
      int k = row_node[r];
      if (k < level_begin) continue;
      const auto& node = tree.nodes[static_cast<std::size_t>(k)];
      if (node.is_leaf()) {
        row_node[r] = -1;
        continue;
      }
      double v = data.columns[static_cast<std::size_t>(node.feature)][r];
      if (std::isnan(v))
        row_node[r] = node.default_left ? node.left : node.right;
      else
        row_node[r] = v < node.threshold ? node.left : node.right;
    }
    level_begin = level_end;
    level_end = static_cast<int>(tree.nodes.size());
  }
  return tree;
}

std::vector<const double*> training_pointers(const FeatureMatrix& data) {
  std::vector<const double*> ptrs(data.n_cols());
  for (std::size_t c = 0; c < data.n_cols(); ++c) ptrs[c] = data.columns[c].data();
  return ptrs;
}

}  // namespace

void Hyperparams::validate() const {
  if (n_trees < 1) throw UsageError("n_trees must be at least 1");
  if (max_depth < 1) throw UsageError("max_depth must be at least 1");
  if (!(eta > 0) || eta > 1) throw UsageError("eta must lie in (0, 1]");
  if (!(l2_lambda >= 0)) throw UsageError("l2_lambda must be non-negative");
  if (!(min_child_weight >= 0)) throw UsageError("min_child_weight must be non-negative");
  if (!(subsample > 0) || subsample > 1) throw UsageError("subsample must lie in (0, 1]");
  if (!(colsample > 0) || colsample > 1) throw UsageError("colsample must lie in (0, 1]");
  if (!(min_split_gain >= 0)) throw UsageError("min_split_gain must be non-negative");
  if (early_stop_patience < 1) throw UsageError("early_stop_patience must be at least 1");
  if (histogram_bins != 0 && histogram_bins < 2)
    throw UsageError("histogram_bins must be 0 (exact) or at least 2");
  if (threads < 1) throw UsageError("threads must be at least 1");
}

std::string hyperparams_to_json(const Hyperparams& hp) {
  nlohmann::json j{{"n_trees", hp.n_trees},
                   {"max_depth", hp.max_depth},
                   {"eta", hp.eta},
                   {"l2_lambda", hp.l2_lambda},
                   {"min_child_weight", hp.min_child_weight},
                   {"subsample", hp.subsample},
                   {"colsample", hp.colsample},
                   {"min_split_gain", hp.min_split_gain},
                   {"early_stop_patience", hp.early_stop_patience},
                   {"histogram_bins", hp.histogram_bins},
                   {"threads", hp.threads},
                   {"seed", hp.seed}};
  return j.dump(2);
}

Hyperparams hyperparams_from_json(const std::string& text) {
  Hyperparams hp;
  try {
    auto j = nlohmann::json::parse(text);
    if (j.contains("n_trees")) hp.n_trees = j["n_trees"].get<int>();
    if (j.contains("max_depth")) hp.max_depth = j["max_depth"].get<int>();
    if (j.contains("eta")) hp.eta = j["eta"].get<double>();
    if (j.contains("l2_lambda")) hp.l2_lambda = j["l2_lambda"].get<double>();
    if (j.contains("min_child_weight"))
      hp.min_child_weight = j["min_child_weight"].get<double>();
    if (j.contains("subsample")) hp.subsample = j["subsample"].get<double>();
    if (j.contains("colsample")) hp.colsample = j["colsample"].get<double>();
    if (j.contains("min_split_gain"))
      hp.min_split_gain = j["min_split_gain"].get<double>();
    if (j.contains("early_stop_patience"))
      hp.early_stop_patience = j["early_stop_patience"].get<int>();
    if (j.contains("histogram_bins"))
      hp.histogram_bins = j["histogram_bins"].get<int>();
    if (j.contains("threads")) hp.threads = j["threads"].get<int>();
    if (j.contains("seed")) hp.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad hyperparameter JSON: ") + e.what());
  }
  hp.validate();
  return hp;
}

double Tree::predict_row(const std::vector<const double*>& feature_ptrs,
                         std::size_t row) const {
  int id = 0;
  while (!nodes[static_cast<std::size_t>(id)].is_leaf()) {
    const auto& nd = nodes[static_cast<std::size_t>(id)];
    double v = feature_ptrs[static_cast<std::size_t>(nd.feature)][row];
    if (std::isnan(v))
      id = nd.default_left ? nd.left : nd.right;
    else
      id = v < nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(id)].value;
}

Model train(const FeatureMatrix& data, EngagementType engagement,
            const Hyperparams& hp, const FeatureMatrix* valid) {
  hp.validate();
  check_features(data);
  const auto& y = checked_labels(data, engagement);
  const std::vector<int>* vy = nullptr;
  if (valid) {
    check_features(*valid);
    if (valid->names != data.names)
      throw DataError("validation matrix columns differ from training columns");
    vy = &valid->labels_for(engagement);
    if (vy->size() != valid->rows)
      throw DataError("validation labels do not align with the matrix");
  }

  const FeatureMatrix* tdata = &data;
  FeatureMatrix binned;
  if (hp.histogram_bins > 0) {
    binned = quantize_columns(data, hp.histogram_bins);
    tdata = &binned;
  }
  const std::size_t n = tdata->rows;
  auto sorted = presort_columns(*tdata);
  auto ptrs = training_pointers(*tdata);

  double rate = 0;
  for (int v : y) rate += v;
  rate /= static_cast<double>(n);

  Model model;
  model.feature_names = data.names;
  model.base_score = std::log(rate / (1.0 - rate));

  std::vector<double> margins(n, model.base_score);
  std::vector<double> vmargins;
  std::vector<const double*> vptrs;
  if (valid) {
    vmargins.assign(valid->rows, model.base_score);
    vptrs = training_pointers(*valid);
  }

  std::vector<double> g(n), h(n);
  std::vector<char> row_mask, col_mask;
  double best_ll = std::numeric_limits<double>::infinity();
  int best_round = -1;
  int since_best = 0;

  for (int round = 0; round < hp.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      double p = sigmoid(margins[i]);
      g[i] = p - y[i];
      h[i] = p * (1.0 - p);
    }
    sample_masks(n, tdata->n_cols(), hp, round, row_mask, col_mask);
    model.trees.push_back(
        build_tree_levelwise(*tdata, g, h, row_mask, col_mask, hp, sorted));
    const Tree& tree = model.trees.back();
    for (std::size_t i = 0; i < n; ++i) margins[i] += tree.predict_row(ptrs, i);
    model.train_logloss.push_back(mean_logloss(margins, y));

    if (valid) {
      for (std::size_t i = 0; i < valid->rows; ++i)
        vmargins[i] += tree.predict_row(vptrs, i);
      double vll = mean_logloss(vmargins, *vy);
      model.valid_logloss.push_back(vll);
      if (vll < best_ll) {
        best_ll = vll;
        best_round = round;
        since_best = 0;
      } else if (++since_best >= hp.early_stop_patience) {
        break;
      }
    }
  }

  if (valid) {
    model.best_iteration = best_round;
    model.trees.resize(static_cast<std::size_t>(best_round + 1));
  } else {
    model.best_iteration = static_cast<int>(model.trees.size()) - 1;
  }
  return model;
}

namespace {

// Exhaustive split search, recursed depth-first. Kept free of the level-wise
// machinery so the two trainers can check each other.
struct ReferenceBuilder {
  const FeatureMatrix& data;
  const std::vector<double>& g;
  const std::vector<double>& h;
  const std::vector<char>& col_mask;
  const Hyperparams& hp;
  Tree tree;

  int build(const std::vector<std::uint32_t>& rows, int depth) {
    auto id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    double Gt = 0, Ht = 0;
    for (std::uint32_t r : rows) {
      Gt += g[r];
      Ht += h[r];
    }

    SplitCand best;
    if (depth < hp.max_depth) {
      for (std::size_t c = 0; c < data.n_cols(); ++c) {
        if (!col_mask[c]) continue;
        const auto& col = data.columns[c];
        std::vector<std::uint32_t> present;
        present.reserve(rows.size());
        for (std::uint32_t r : rows)
          if (!std::isnan(col[r])) present.push_back(r);
        std::sort(present.begin(), present.end(),
                  [&col](std::uint32_t a, std::uint32_t b) {
                    if (col[a] != col[b]) return col[a] < col[b];
                    return a < b;
                  });
        double Gnm = 0, Hnm = 0;
        for (std::uint32_t r : present) {
          Gnm += g[r];
          Hnm += h[r];
        }
        const bool has_missing = present.size() < rows.size();
        const double Gm = Gt - Gnm, Hm = Ht - Hnm;

        // Per-column winner first, merged across columns afterwards; the
        // level-wise trainer reduces in the same two stages.
        SplitCand col_best;
        double Gl = 0, Hl = 0;
        for (std::size_t k = 0; k < present.size(); ++k) {
          std::uint32_t r = present[k];
          double v = col[r];
          if (k > 0) {
            double prev = col[present[k - 1]];
            if (v != prev) {
              double thr = prev + (v - prev) * 0.5;
              if (thr > prev && thr <= v) {
                auto consider = [&](double Lg, double Lh, bool default_left) {
                  double Rg = Gt - Lg, Rh = Ht - Lh;
                  if (Lh < hp.min_child_weight || Rh < hp.min_child_weight) return;
                  double gain =
                      0.5 * (Lg * Lg / (Lh + hp.l2_lambda) +
                             Rg * Rg / (Rh + hp.l2_lambda) -
                             Gt * Gt / (Ht + hp.l2_lambda));
                  SplitCand cand{gain, static_cast<int>(c), thr, default_left};
                  if (reference_better(cand, col_best)) col_best = cand;
                };
                if (has_missing) {
                  consider(Gl, Hl, false);
                  consider(Gl + Gm, Hl + Hm, true);
                } else {
                  consider(Gl, Hl, true);
                }
              }
            }
          }
          Gl += g[r];
          Hl += h[r];
        }
        if (reference_better(col_best, best)) best = col_best;
      }
    }

    if (best.feature < 0 || best.gain < hp.min_split_gain) {
      tree.nodes[static_cast<std::size_t>(id)].feature = -1;
      tree.nodes[static_cast<std::size_t>(id)].value =
          -Gt / (Ht + hp.l2_lambda) * hp.eta;
      return id;
    }

    const auto& col = data.columns[static_cast<std::size_t>(best.feature)];
    std::vector<std::uint32_t> left_rows, right_rows;
    for (std::uint32_t r : rows) {
      double v = col[r];
      bool to_left = std::isnan(v) ? best.default_left : v < best.threshold;
      (to_left ? left_rows : right_rows).push_back(r);
    }
    int left_id = build(left_rows, depth + 1);
    int right_id = build(right_rows, depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.default_left = best.default_left;
    node.left = left_id;
    node.right = right_id;
    return id;
  }

  // the canonical order again, with identical comparison arithmetic so both
  // trainers resolve near-band candidates the same way
  static bool reference_better(const SplitCand& a, const SplitCand& b) {
    if (b.feature < 0) return a.feature >= 0;
    if (a.feature < 0) return false;
    double band = 1e-9 * std::max({1.0, std::fabs(a.gain), std::fabs(b.gain)});
    if (a.gain > b.gain + band) return true;
    if (b.gain > a.gain + band) return false;
    if (a.feature != b.feature) return a.feature < b.feature;
    if (a.threshold != b.threshold) return a.threshold < b.threshold;
    return a.default_left && !b.default_left;
  }
};

}  // namespace

Model train_reference(const FeatureMatrix& data, EngagementType engagement,
                      const Hyperparams& hp) {
  hp.validate();
  check_features(data);
  const auto& y = checked_labels(data, engagement);
  const FeatureMatrix* tdata = &data;
  FeatureMatrix binned;
  if (hp.histogram_bins > 0) {
    binned = quantize_columns(data, hp.histogram_bins);
    tdata = &binned;
  }
  const std::size_t n = tdata->rows;
  auto ptrs = training_pointers(*tdata);

  double rate = 0;
  for (int v : y) rate += v;
  rate /= static_cast<double>(n);

  Model model;
  model.feature_names = data.names;
  model.base_score = std::log(rate / (1.0 - rate));

  std::vector<double> margins(n, model.base_score);
  std::vector<double> g(n), h(n);
  std::vector<char> row_mask, col_mask;
  for (int round = 0; round < hp.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      double p = sigmoid(margins[i]);
      g[i] = p - y[i];
      h[i] = p * (1.0 - p);
    }
    sample_masks(n, tdata->n_cols(), hp, round, row_mask, col_mask);
    std::vector<std::uint32_t> rows;
    for (std::uint32_t r = 0; r < n; ++r)
      if (row_mask[r]) rows.push_back(r);
    ReferenceBuilder builder{*tdata, g, h, col_mask, hp, {}};
    builder.build(rows, 0);
    model.trees.push_back(std::move(builder.tree));
    const Tree& tree = model.trees.back();
    for (std::size_t i = 0; i < n; ++i) margins[i] += tree.predict_row(ptrs, i);
    model.train_logloss.push_back(mean_logloss(margins, y));
  }
  model.best_iteration = static_cast<int>(model.trees.size()) - 1;
  return model;
}

std::vector<double> predict(const Model& model, const FeatureMatrix& data) {
  std::vector<const double*> ptrs(model.feature_names.size());
  for (std::size_t f = 0; f < model.feature_names.size(); ++f) {
    auto idx = data.col_index(model.feature_names[f]);
    if (idx < 0)
      throw DataError("matrix lacks model feature " + model.feature_names[f]);
    if (data.columns[static_cast<std::size_t>(idx)].size() != data.rows)
      throw DataError("column " + model.feature_names[f] +
                      " does not align with the matrix");
    ptrs[f] = data.columns[static_cast<std::size_t>(idx)].data();
  }
  std::vector<double> out(data.rows);
  for (std::size_t i = 0; i < data.rows; ++i) {
    double margin = model.base_score;
    for (const auto& tree : model.trees) margin += tree.predict_row(ptrs, i);
    out[i] = sigmoid(margin);
  }
  return out;
}

namespace {

bool nodes_equivalent(const Tree& a, int ia, const Tree& b, int ib, double tol) {
  const auto& na = a.nodes[static_cast<std::size_t>(ia)];
  const auto& nb = b.nodes[static_cast<std::size_t>(ib)];
  if (na.is_leaf() != nb.is_leaf()) return false;
  if (na.is_leaf()) return std::fabs(na.value - nb.value) <= tol;
  if (na.feature != nb.feature || na.threshold != nb.threshold ||
      na.default_left != nb.default_left)
    return false;
  return nodes_equivalent(a, na.left, b, nb.left, tol) &&
         nodes_equivalent(a, na.right, b, nb.right, tol);
}

}  // namespace

bool trees_equivalent(const Tree& a, const Tree& b, double tol) {
  return nodes_equivalent(a, 0, b, 0, tol);
}

bool models_equivalent(const Model& a, const Model& b, double tol) {
  if (a.feature_names != b.feature_names) return false;
  if (std::fabs(a.base_score - b.base_score) > tol) return false;
  if (a.trees.size() != b.trees.size()) return false;
  for (std::size_t t = 0; t < a.trees.size(); ++t)
    if (!trees_equivalent(a.trees[t], b.trees[t], tol)) return false;
  return true;
}

std::string Model::to_json() const {
  nlohmann::json root;
  root["base_score"] = base_score;
  root["best_iteration"] = best_iteration;
  root["feature_names"] = feature_names;
  root["train_logloss"] = train_logloss;
  root["valid_logloss"] = valid_logloss;
  nlohmann::json jtrees = nlohmann::json::array();
  for (const auto& tree : trees) {
    nlohmann::json jnodes = nlohmann::json::array();
    for (const auto& nd : tree.nodes)
      jnodes.push_back({nd.feature, nd.threshold, nd.default_left ? 1 : 0, nd.left,
                        nd.right, nd.value});
    jtrees.push_back(std::move(jnodes));
  }
  root["trees"] = std::move(jtrees);
  return root.dump(2);
}

Model Model::from_json(const std::string& text) {
  Model model;
  try {
    auto root = nlohmann::json::parse(text);
    model.base_score = root.at("base_score").get<double>();
    model.best_iteration = root.at("best_iteration").get<int>();
    model.feature_names = root.at("feature_names").get<std::vector<std::string>>();
    model.train_logloss = root.at("train_logloss").get<std::vector<double>>();
    model.valid_logloss = root.at("valid_logloss").get<std::vector<double>>();
    for (const auto& jnodes : root.at("trees")) {
      Tree tree;
      for (const auto& jn : jnodes) {
        if (!jn.is_array() || jn.size() != 6)
          throw DataError("malformed tree node");
        TreeNode nd;
        nd.feature = jn[0].get<int>();
        nd.threshold = jn[1].get<double>();
        nd.default_left = jn[2].get<int>() != 0;
        nd.left = jn[3].get<int>();
        nd.right = jn[4].get<int>();
        nd.value = jn[5].get<double>();
        tree.nodes.push_back(nd);
      }
      if (tree.nodes.empty()) throw DataError("tree without nodes");
      for (const auto& nd : tree.nodes) {
        if (nd.is_leaf()) {
          if (!std::isfinite(nd.value)) throw DataError("non-finite leaf value");
        } else if (nd.left < 0 || nd.right < 0 ||
                   nd.left >= static_cast<int>(tree.nodes.size()) ||
                   nd.right >= static_cast<int>(tree.nodes.size()) ||
                   static_cast<std::size_t>(nd.feature) >=
                       model.feature_names.size()) {
          throw DataError("tree node references out of range");
        }
      }
      model.trees.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad model JSON: ") + e.what());
  }
  return model;
}

void Model::save(const std::string& path) const { util::write_file(path, to_json()); }

Model Model::load(const std::string& path) {
  return from_json(util::read_file(path));
}

void write_curve_csv(const std::string& path, const std::string& header,
                     const std::vector<double>& values) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  f << header << '\n';
  char buf[40];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
    f << i << ',' << buf << '\n';
  }
  if (!f) throw DataError("write failed: " + path);
}

}  // namespace engpred::gbdt
