#include "engpred/ensemble.hpp"

#include <bit>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "engpred/errors.hpp"
#include "engpred/eval.hpp"

namespace engpred::ensemble {

namespace {

double positive_rate(const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  std::size_t pos = 0;
  for (int y : labels) pos += static_cast<std::size_t>(y);
  return static_cast<double>(pos) / static_cast<double>(labels.size());
}

}  // namespace

std::string mask_to_string(unsigned mask) {
  std::string out;
  for (unsigned g = 0; g < 4; ++g) {
    if (!(mask & (1u << g))) continue;
    if (!out.empty()) out += '+';
    out += 'D';
    out += static_cast<char>('1' + g);
  }
  return out;
}

FeatureMatrix assemble(const std::vector<EngagementRecord>& records,
                       const std::array<const FeatureBlock*, 4>& blocks) {
  FeatureMatrix m;
  m.rows = records.size();
  std::unordered_set<std::string> seen;
  for (unsigned g = 0; g < 4; ++g) {
    const FeatureBlock* b = blocks[g];
    if (b == nullptr) continue;
    if (b->rows != records.size()) {
      throw DataError("feature group " + mask_to_string(1u << g) + " has " +
                      std::to_string(b->rows) + " rows, expected " +
                      std::to_string(records.size()));
    }
    if (b->names.size() != b->cols.size()) {
      throw DataError("feature group " + mask_to_string(1u << g) +
                      " has mismatched name and column counts");
    }
    for (std::size_t c = 0; c < b->cols.size(); ++c) {
      if (!seen.insert(b->names[c]).second) {
        throw DataError("duplicate feature column: " + b->names[c]);
      }
      m.names.push_back(b->names[c]);
      m.columns.push_back(b->cols[c]);
    }
  }
  for (EngagementType t : kAllEngagementTypes) {
    auto& lab = m.labels[static_cast<std::size_t>(t)];
    lab.resize(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      lab[i] = records[i].has_engagement(t) ? 1 : 0;
    }
  }
  return m;
}

AblationResult ablate(const std::vector<EngagementRecord>& records,
                      const std::array<const FeatureBlock*, 4>& blocks,
                      EngagementType engagement, const gbdt::Hyperparams& hp,
                      const ingest::SplitIndices& split) {
  for (unsigned g = 0; g < 4; ++g) {
    if (blocks[g] == nullptr) {
      throw UsageError("ablation needs all four feature groups; " +
                       mask_to_string(1u << g) + " is absent");
    }
  }
  if (split.train.empty() || split.dev.empty()) {
    throw UsageError("ablation needs non-empty train and dev splits");
  }
  FeatureMatrix full = assemble(records, blocks);
  FeatureMatrix train_all = full.select_rows(split.train);
  FeatureMatrix dev_all = full.select_rows(split.dev);

  // Column index range per group, in assembly order.
  std::array<std::pair<std::size_t, std::size_t>, 4> group_span;
  std::size_t offset = 0;
  for (unsigned g = 0; g < 4; ++g) {
    group_span[g] = {offset, offset + blocks[g]->names.size()};
    offset = group_span[g].second;
  }

  const double baseline =
      positive_rate(train_all.labels_for(engagement));
  const auto& dev_labels = dev_all.labels_for(engagement);

  AblationResult result;
  for (unsigned mask = 1; mask <= kAllGroupsMask; ++mask) {
    std::vector<std::size_t> cols;
    for (unsigned g = 0; g < 4; ++g) {
      if (!(mask & (1u << g))) continue;
      for (std::size_t c = group_span[g].first; c < group_span[g].second; ++c) {
        cols.push_back(c);
      }
    }
    FeatureMatrix train = train_all.select_columns(cols);
    FeatureMatrix dev = dev_all.select_columns(cols);
    gbdt::Model model = gbdt::train(train, engagement, hp);
    std::vector<double> scores = gbdt::predict(model, dev);
    AblationRow row;
    row.mask = mask;
    row.prauc = eval::prauc(scores, dev_labels);
    row.rce = eval::rce(scores, dev_labels, baseline);
    result.rows.push_back(row);
  }

  result.best_mask = result.rows.front().mask;
  double best_rce = result.rows.front().rce;
  for (const AblationRow& row : result.rows) {
    if (row.rce > best_rce) {
      best_rce = row.rce;
      result.best_mask = row.mask;
    } else if (row.rce == best_rce && row.mask != result.best_mask) {
      unsigned cur = result.best_mask;
      if (std::popcount(row.mask) < std::popcount(cur) ||
          (std::popcount(row.mask) == std::popcount(cur) && row.mask < cur)) {
        result.best_mask = row.mask;
      }
    }
  }
  return result;
}

GridSearchResult grid_search(
    const FeatureMatrix& train, const FeatureMatrix& valid,
    EngagementType engagement, const gbdt::Hyperparams& base,
    const std::vector<std::pair<std::string, std::vector<double>>>& grid) {
  if (grid.empty()) throw UsageError("grid search needs at least one parameter");
  for (const auto& [name, values] : grid) {
    if (values.empty()) {
      throw UsageError("grid parameter " + name + " has no values");
    }
  }

  auto apply = [](gbdt::Hyperparams& hp, const std::string& name, double v) {
    if (name == "n_trees") hp.n_trees = static_cast<int>(v);
    else if (name == "max_depth") hp.max_depth = static_cast<int>(v);
    else if (name == "eta") hp.eta = v;
    else if (name == "l2_lambda") hp.l2_lambda = v;
    else if (name == "min_child_weight") hp.min_child_weight = v;
    else if (name == "subsample") hp.subsample = v;
    else if (name == "colsample") hp.colsample = v;
    else if (name == "min_split_gain") hp.min_split_gain = v;
    else if (name == "early_stop_patience") hp.early_stop_patience = static_cast<int>(v);
    else if (name == "seed") hp.seed = static_cast<std::uint64_t>(v);
    else throw UsageError("unknown grid parameter: " + name);
  };

  const double baseline = positive_rate(train.labels_for(engagement));
  const auto& valid_labels = valid.labels_for(engagement);

  std::size_t total = 1;
  for (const auto& [name, values] : grid) total *= values.size();

  GridSearchResult result;
  result.points.reserve(total);
  std::vector<std::size_t> idx(grid.size(), 0);
  for (std::size_t point = 0; point < total; ++point) {
    gbdt::Hyperparams hp = base;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      apply(hp, grid[j].first, grid[j].second[idx[j]]);
    }
    gbdt::Model model = gbdt::train(train, engagement, hp, &valid);
    std::vector<double> scores = gbdt::predict(model, valid);
    GridPoint gp;
    gp.hp = hp;
    gp.valid_prauc = eval::prauc(scores, valid_labels);
    gp.valid_rce = eval::rce(scores, valid_labels, baseline);
    result.points.push_back(std::move(gp));

    // Odometer: the last parameter varies fastest.
    for (std::size_t j = grid.size(); j-- > 0;) {
      if (++idx[j] < grid[j].second.size()) break;
      idx[j] = 0;
    }
  }

  result.best_index = 0;
  for (std::size_t i = 1; i < result.points.size(); ++i) {
    if (result.points[i].valid_rce > result.points[result.best_index].valid_rce) {
      result.best_index = i;
    }
  }
  return result;
}

std::string ablation_to_json(const AblationResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const AblationRow& row : result.rows) {
    rows.push_back({{"mask", row.mask},
                    {"groups", mask_to_string(row.mask)},
                    {"prauc", row.prauc},
                    {"rce", row.rce}});
  }
  nlohmann::json j{{"rows", rows},
                   {"best_mask", result.best_mask},
                   {"best_groups", mask_to_string(result.best_mask)}};
  return j.dump(2) + "\n";
}

std::string grid_to_json(const GridSearchResult& result) {
  nlohmann::json points = nlohmann::json::array();
  for (const GridPoint& gp : result.points) {
    points.push_back({{"hyperparams", nlohmann::json::parse(gbdt::hyperparams_to_json(gp.hp))},
                      {"valid_prauc", gp.valid_prauc},
                      {"valid_rce", gp.valid_rce}});
  }
  nlohmann::json j{{"points", points}, {"best_index", result.best_index}};
  return j.dump(2) + "\n";
}

}  // namespace engpred::ensemble
