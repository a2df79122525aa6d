#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace engpred {

// Sentinel for absent feature values. Only the GBDT default-direction rule
// interprets it; no arithmetic may touch it.
inline double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }
inline bool is_missing(double v) { return std::isnan(v); }

// One stage-1 feature group: named, row-aligned columns. Column-major so the
// tree trainer can scan a feature without striding.
struct FeatureBlock {
  std::vector<std::string> names;
  std::vector<std::vector<double>> cols;
  std::size_t rows = 0;

  std::size_t n_cols() const { return cols.size(); }
  double at(std::size_t row, std::size_t col) const { return cols[col][row]; }

  void add_column(std::string name, std::vector<double> values);

  // Binary columnar file plus a human-readable JSON sidecar (<path>.json)
  // listing the column names. Writes are byte-deterministic.
  void save(const std::string& path) const;
  static FeatureBlock load(const std::string& path);

  // Debug view; missing values render as "NA".
  void write_tsv(const std::string& path) const;

  bool operator==(const FeatureBlock&) const = default;
};

}  // namespace engpred
