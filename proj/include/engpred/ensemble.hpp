#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "engpred/feature_block.hpp"
#include "engpred/feature_matrix.hpp"
#include "engpred/gbdt.hpp"
#include "engpred/ingest.hpp"
#include "engpred/types.hpp"

namespace engpred::ensemble {

// feature group bit: 1 << 0 is D1 ... 1 << 3 is D4
inline constexpr unsigned kAllGroupsMask = 0xF;

std::string mask_to_string(unsigned mask);  // "D1+D4"

// Slot i carries feature group i+1; null slots are simply absent. Present
// blocks must align row-for-row with the records. Labels come from the
// engagement timestamps.
FeatureMatrix assemble(const std::vector<EngagementRecord>& records,
                       const std::array<const FeatureBlock*, 4>& blocks);

struct AblationRow {
  unsigned mask = 0;
  double prauc = 0;
  double rce = 0;
};

struct AblationResult {
  std::vector<AblationRow> rows;  // all 15 non-empty subsets, mask order
  unsigned best_mask = 0;
};

// Trains one model per feature-group subset on the train split and scores
// the dev split. Best subset = highest dev RCE, ties to fewer groups, then
// to the lower mask.
AblationResult ablate(const std::vector<EngagementRecord>& records,
                      const std::array<const FeatureBlock*, 4>& blocks,
                      EngagementType engagement, const gbdt::Hyperparams& hp,
                      const ingest::SplitIndices& split);

struct GridPoint {
  gbdt::Hyperparams hp;
  double valid_rce = 0;
  double valid_prauc = 0;
};

struct GridSearchResult {
  std::vector<GridPoint> points;  // odometer order, last parameter fastest
  std::size_t best_index = 0;    // highest valid RCE, ties to the earlier point
};

// Exhaustive cartesian product over the named hyperparameters. Integer
// parameters take floor of the supplied value.
GridSearchResult grid_search(
    const FeatureMatrix& train, const FeatureMatrix& valid,
    EngagementType engagement, const gbdt::Hyperparams& base,
    const std::vector<std::pair<std::string, std::vector<double>>>& grid);

std::string ablation_to_json(const AblationResult& result);
std::string grid_to_json(const GridSearchResult& result);

}  // namespace engpred::ensemble
