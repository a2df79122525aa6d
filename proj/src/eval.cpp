#include "engpred/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "engpred/errors.hpp"

namespace engpred::eval {

namespace {

void check_inputs(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw UsageError("scores and labels differ in length");
  if (scores.empty()) throw DataError("cannot evaluate an empty split");
  std::size_t pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
    pos += static_cast<std::size_t>(y);
  }
  if (pos == 0 || pos == labels.size())
    throw DataError("metrics need at least one positive and one negative label");
  for (double s : scores)
    if (!std::isfinite(s)) throw DataError("scores must be finite");
}

}  // namespace

std::vector<PrPoint> pr_curve(const std::vector<double>& scores,
                              const std::vector<int>& labels) {
  check_inputs(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  double total_pos = 0;
  for (int y : labels) total_pos += y;

  std::vector<PrPoint> points;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < n) {
    double s = scores[order[i]];
    // everything tied at s enters at a single threshold
    while (i < n && scores[order[i]] == s) {
      if (labels[order[i]]) ++tp; else ++fp;
      ++i;
    }
    points.push_back({s, static_cast<double>(tp) / static_cast<double>(tp + fp),
                      static_cast<double>(tp) / total_pos});
  }
  return points;
}

void write_pr_csv(const std::string& path, const std::vector<PrPoint>& points) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  f << "threshold,precision,recall\n";
  char buf[96];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.threshold, p.precision,
                  p.recall);
    f << buf;
  }
  if (!f) throw DataError("write failed: " + path);
}

double prauc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double ap = 0;
  double prev_recall = 0;
  for (const auto& p : pr_curve(scores, labels)) {
    ap += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return ap;
}

double prauc_trapezoid(const std::vector<double>& scores,
                       const std::vector<int>& labels) {
  auto points = pr_curve(scores, labels);
  double area = 0;
  // anchor at (0, first precision) so the first panel matches the step form
  double prev_recall = 0, prev_precision = points.front().precision;
  for (const auto& p : points) {
    area += (p.recall - prev_recall) * 0.5 * (p.precision + prev_precision);
    prev_recall = p.recall;
    prev_precision = p.precision;
  }
  return area;
}

double cross_entropy(const std::vector<double>& scores,
                     const std::vector<int>& labels) {
  check_inputs(scores, labels);
  constexpr double kEps = 1e-15;
  double sum = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    double s = std::min(1.0 - kEps, std::max(kEps, scores[i]));
    sum += labels[i] ? -std::log(s) : -std::log(1.0 - s);
  }
  return sum / static_cast<double>(scores.size());
}

double rce(const std::vector<double>& scores, const std::vector<int>& labels,
           double baseline_rate) {
  if (!(baseline_rate > 0.0 && baseline_rate < 1.0))
    throw UsageError("baseline rate must lie in (0,1)");
  double ce_model = cross_entropy(scores, labels);
  std::vector<double> base(scores.size(), baseline_rate);
  double ce_base = cross_entropy(base, labels);
  return 100.0 * (1.0 - ce_model / ce_base);
}

MetricReport compute_report(
    std::string name,
    const std::array<std::vector<double>, kNumEngagementTypes>& scores,
    const std::array<std::vector<int>, kNumEngagementTypes>& labels,
    const std::array<double, kNumEngagementTypes>& baseline_rates) {
  MetricReport rep;
  rep.name = std::move(name);
  for (int t = 0; t < kNumEngagementTypes; ++t) {
    auto& m = rep.per_type[static_cast<std::size_t>(t)];
    const auto& s = scores[static_cast<std::size_t>(t)];
    const auto& y = labels[static_cast<std::size_t>(t)];
    m.prauc = prauc(s, y);
    m.rce = rce(s, y, baseline_rates[static_cast<std::size_t>(t)]);
    m.n = y.size();
    std::size_t pos = 0;
    for (int v : y) pos += static_cast<std::size_t>(v);
    m.positive_rate = y.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(y.size());
  }
  return rep;
}

namespace {

// Report column order, fixed.
constexpr EngagementType kColumnOrder[] = {EngagementType::Retweet,
                                           EngagementType::Reply,
                                           EngagementType::Like,
                                           EngagementType::Quote};

std::string json_type_key(EngagementType t) {
  switch (t) {
    case EngagementType::Reply: return "reply";
    case EngagementType::Retweet: return "retweet";
    case EngagementType::Quote: return "quote";
    default: return "like";
  }
}

}  // namespace

std::string render_table(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw UsageError("nothing to render");

  std::vector<std::string> header{"model"};
  for (auto t : kColumnOrder) {
    header.push_back(std::string("PRAUC ") + to_string(t));
    header.push_back(std::string("RCE ") + to_string(t));
  }

  // cell values, then per-column best marking
  std::vector<std::vector<double>> values(reports.size());
  for (std::size_t r = 0; r < reports.size(); ++r) {
    for (auto t : kColumnOrder) {
      const auto& m = reports[r].per_type[static_cast<std::size_t>(t)];
      values[r].push_back(m.prauc);
      values[r].push_back(m.rce);
    }
  }
  const std::size_t n_cols = 2 * kNumEngagementTypes;
  std::vector<double> best(n_cols, -std::numeric_limits<double>::infinity());
  for (const auto& row : values)
    for (std::size_t c = 0; c < n_cols; ++c) best[c] = std::max(best[c], row[c]);

  std::vector<std::vector<std::string>> cells;
  cells.push_back(header);
  char buf[64];
  for (std::size_t r = 0; r < reports.size(); ++r) {
    std::vector<std::string> row{reports[r].name};
    for (std::size_t c = 0; c < n_cols; ++c) {
      std::snprintf(buf, sizeof(buf), "%.4f", values[r][c]);
      std::string cell = buf;
      if (reports.size() > 1 && values[r][c] == best[c]) cell += '*';
      row.push_back(cell);
    }
    cells.push_back(row);
  }

  std::vector<std::size_t> widths(cells[0].size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c)
      widths[c] = std::max(widths[c], row[c].size());

  std::string out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      if (c) out += "  ";
      out += cells[r][c];
      out.append(widths[c] - cells[r][c].size(), ' ');
    }
    out += '\n';
    if (r == 0) {
      for (std::size_t c = 0; c < widths.size(); ++c) {
        if (c) out += "  ";
        out.append(widths[c], '-');
      }
      out += '\n';
    }
  }
  return out;
}

std::string reports_json(const std::vector<MetricReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& rep : reports) {
    nlohmann::json jr;
    jr["name"] = rep.name;
    for (auto t : kAllEngagementTypes) {
      const auto& m = rep.per_type[static_cast<std::size_t>(t)];
      jr["metrics"][json_type_key(t)] = {{"prauc", m.prauc},
                                         {"rce", m.rce},
                                         {"n", m.n},
                                         {"positive_rate", m.positive_rate}};
    }
    arr.push_back(jr);
  }
  return nlohmann::json{{"reports", arr}}.dump(2);
}

}  // namespace engpred::eval
