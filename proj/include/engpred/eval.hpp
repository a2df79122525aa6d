#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "engpred/types.hpp"

namespace engpred::eval {

struct PrPoint {
  double threshold = 0;  // score at this cut; ties share one point
  double precision = 0;
  double recall = 0;
};

// Grouped precision-recall points, descending score order. Requires at least
// one positive and one negative label.
std::vector<PrPoint> pr_curve(const std::vector<double>& scores,
                              const std::vector<int>& labels);

void write_pr_csv(const std::string& path, const std::vector<PrPoint>& points);

// Average precision: AP = sum over thresholds of (delta recall * precision).
double prauc(const std::vector<double>& scores, const std::vector<int>& labels);

// Trapezoidal area over the same grouped PR points. Comparison variant only;
// prauc is the default everywhere else.
double prauc_trapezoid(const std::vector<double>& scores,
                       const std::vector<int>& labels);

// Mean negative log-likelihood, scores clipped to [1e-15, 1 - 1e-15].
double cross_entropy(const std::vector<double>& scores,
                     const std::vector<int>& labels);

// 100 * (1 - CE(model) / CE(constant baseline_rate predictor)). The baseline
// rate is the TRAINING-split positive rate, supplied by the caller. Both
// entropies run through cross_entropy, so scoring every row at exactly
// baseline_rate yields exactly 0.
double rce(const std::vector<double>& scores, const std::vector<int>& labels,
           double baseline_rate);

struct TypeMetrics {
  double prauc = 0;
  double rce = 0;
  std::size_t n = 0;
  double positive_rate = 0;  // on the evaluated split
};

struct MetricReport {
  std::string name;
  std::array<TypeMetrics, kNumEngagementTypes> per_type;
};

MetricReport compute_report(
    std::string name,
    const std::array<std::vector<double>, kNumEngagementTypes>& scores,
    const std::array<std::vector<int>, kNumEngagementTypes>& labels,
    const std::array<double, kNumEngagementTypes>& baseline_rates);

// Plain-text table, one row per report. Fixed column order:
// (PRAUC, RCE) x (Retweet, Reply, Like, Quote). With several rows the best
// value per column is marked '*'.
std::string render_table(const std::vector<MetricReport>& reports);

// Same values, machine-readable; doubles survive a parse round trip.
std::string reports_json(const std::vector<MetricReport>& reports);

}  // namespace engpred::eval
