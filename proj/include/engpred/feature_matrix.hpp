#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "engpred/types.hpp"

namespace engpred {

// Column-major dense matrix with NaN as the missing sentinel, plus one
// aligned 0/1 label vector per engagement type.
struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::size_t rows = 0;
  std::array<std::vector<int>, kNumEngagementTypes> labels;

  std::size_t n_cols() const { return columns.size(); }
  double at(std::size_t row, std::size_t col) const { return columns[col][row]; }
  const std::vector<int>& labels_for(EngagementType type) const {
    return labels[static_cast<std::size_t>(type)];
  }

  // -1 when the name is absent
  std::int64_t col_index(const std::string& name) const;

  // keeps the named rows, in the given order
  FeatureMatrix select_rows(const std::vector<std::size_t>& indices) const;
  // keeps the named columns, in the given order; labels are carried over
  FeatureMatrix select_columns(const std::vector<std::size_t>& indices) const;
};

}  // namespace engpred
