#include "engpred/feature_matrix.hpp"

namespace engpred {

std::int64_t FeatureMatrix::col_index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<std::int64_t>(i);
  return -1;
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<std::size_t>& indices) const {
  FeatureMatrix out;
  out.names = names;
  out.rows = indices.size();
  out.columns.reserve(columns.size());
  for (const auto& col : columns) {
    std::vector<double> sub(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) sub[i] = col[indices[i]];
    out.columns.push_back(std::move(sub));
  }
  for (std::size_t e = 0; e < kNumEngagementTypes; ++e) {
    if (labels[e].empty()) continue;
    std::vector<int> sub(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) sub[i] = labels[e][indices[i]];
    out.labels[e] = std::move(sub);
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_columns(
    const std::vector<std::size_t>& indices) const {
  FeatureMatrix out;
  out.rows = rows;
  out.labels = labels;
  out.names.reserve(indices.size());
  out.columns.reserve(indices.size());
  for (std::size_t c : indices) {
    out.names.push_back(names[c]);
    out.columns.push_back(columns[c]);
  }
  return out;
}

}  // namespace engpred
