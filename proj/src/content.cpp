#include "engpred/content.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "engpred/errors.hpp"
#include "engpred/util.hpp"

namespace engpred::content {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

void collect_ngrams(const std::vector<std::uint32_t>& tokens,
                    std::vector<Ngram>& out) {
  out.clear();
  const std::size_t len = tokens.size();
  for (std::size_t i = 0; i < len; ++i) {
    Ngram g{std::uint64_t{tokens[i]} + 1, 0, 0};
    out.push_back(g);
    if (i + 1 < len) {
      g[1] = std::uint64_t{tokens[i + 1]} + 1;
      out.push_back(g);
      if (i + 2 < len) {
        g[2] = std::uint64_t{tokens[i + 2]} + 1;
        out.push_back(g);
      }
    }
  }
}

}  // namespace

Ngram make_ngram(std::initializer_list<std::uint64_t> tokens) {
  if (tokens.size() < 1 || tokens.size() > 3)
    throw UsageError("n-grams cover 1 to 3 tokens");
  Ngram g{0, 0, 0};
  std::size_t i = 0;
  for (std::uint64_t t : tokens) g[i++] = t + 1;
  return g;
}

std::size_t NgramHash::operator()(const Ngram& g) const {
  return util::splitmix64(
      util::fnv1a64(reinterpret_cast<const char*>(g.data()), sizeof(Ngram)));
}

double dot(const SparseVector& a, const std::vector<double>& dense) {
  double s = 0;
  for (const auto& [col, val] : a.entries) s += val * dense[col];
  return s;
}

TfidfVocabulary TfidfVocabulary::fit(
    const std::vector<std::vector<std::uint32_t>>& corpus, std::size_t max_features,
    std::uint32_t min_df) {
  if (corpus.empty()) throw UsageError("cannot fit a vocabulary on an empty corpus");
  if (max_features == 0) throw UsageError("max_features must be positive");
  if (min_df == 0) throw UsageError("min_df must be positive");

  std::unordered_map<Ngram, std::uint32_t, NgramHash> df;
  std::vector<Ngram> doc;
  for (const auto& tokens : corpus) {
    collect_ngrams(tokens, doc);
    std::sort(doc.begin(), doc.end());
    doc.erase(std::unique(doc.begin(), doc.end()), doc.end());
    for (const auto& g : doc) ++df[g];
  }

  std::vector<std::pair<Ngram, std::uint32_t>> kept;
  for (const auto& [g, count] : df)
    if (count >= min_df) kept.emplace_back(g, count);
  if (kept.empty()) throw DataError("no n-gram reaches the min_df threshold");

  auto by_priority = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  if (kept.size() > max_features) {
    std::nth_element(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(max_features),
                     kept.end(), by_priority);
    kept.resize(max_features);
  }
  std::sort(kept.begin(), kept.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  TfidfVocabulary vocab;
  vocab.entries_.reserve(kept.size());
  const double n_docs = static_cast<double>(corpus.size());
  for (const auto& [g, count] : kept)
    vocab.entries_.emplace_back(g, std::log((1.0 + n_docs) / (1.0 + count)) + 1.0);
  vocab.rebuild_index();
  return vocab;
}

void TfidfVocabulary::rebuild_index() {
  index_.clear();
  index_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i)
    index_.emplace(entries_[i].first, static_cast<std::uint32_t>(i));
}

std::int64_t TfidfVocabulary::find(const Ngram& g) const {
  auto it = index_.find(g);
  return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

SparseVector TfidfVocabulary::transform(
    const std::vector<std::uint32_t>& tokens) const {
  std::vector<Ngram> grams;
  collect_ngrams(tokens, grams);
  std::unordered_map<std::uint32_t, double> counts;
  for (const auto& g : grams) {
    auto it = index_.find(g);
    if (it != index_.end()) counts[it->second] += 1.0;
  }
  SparseVector out;
  out.entries.reserve(counts.size());
  for (const auto& [col, count] : counts)
    out.entries.emplace_back(col, count * entries_[col].second);
  std::sort(out.entries.begin(), out.entries.end());
  double norm_sq = 0;
  for (const auto& [col, val] : out.entries) norm_sq += val * val;
  if (norm_sq > 0) {
    double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& [col, val] : out.entries) val *= inv;
  }
  return out;
}

void TfidfVocabulary::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  f.write("ENGTFV01", 8);
  std::uint64_t count = entries_.size();
  f.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const auto& [g, idf] : entries_) {
    f.write(reinterpret_cast<const char*>(g.data()), sizeof(Ngram));
    f.write(reinterpret_cast<const char*>(&idf), sizeof(idf));
  }
  if (!f) throw DataError("write failed: " + path);
}

TfidfVocabulary TfidfVocabulary::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, "ENGTFV01", 8) != 0)
    throw DataError("not a vocabulary file: " + path);
  std::uint64_t count = 0;
  f.read(reinterpret_cast<char*>(&count), sizeof(count));
  TfidfVocabulary vocab;
  vocab.entries_.resize(count);
  for (auto& [g, idf] : vocab.entries_) {
    f.read(reinterpret_cast<char*>(g.data()), sizeof(Ngram));
    f.read(reinterpret_cast<char*>(&idf), sizeof(idf));
  }
  if (!f) throw DataError("truncated vocabulary file: " + path);
  for (std::size_t i = 0; i < vocab.entries_.size(); ++i) {
    if (i > 0 && !(vocab.entries_[i - 1].first < vocab.entries_[i].first))
      throw DataError("vocabulary entries out of order in " + path);
    if (!(vocab.entries_[i].second > 0) || !std::isfinite(vocab.entries_[i].second))
      throw DataError("invalid idf in " + path);
  }
  vocab.rebuild_index();
  return vocab;
}

std::string_view to_string(LossKind loss) {
  return loss == LossKind::Hinge ? "hinge" : "logistic";
}

LossKind loss_from_string(std::string_view text) {
  if (text == "hinge") return LossKind::Hinge;
  if (text == "logistic") return LossKind::Logistic;
  throw UsageError("unknown loss '" + std::string(text) + "'");
}

namespace {

struct Calibration {
  double a = 1, b = 0;
};

// Newton fit of sigmoid(a*margin + b) against smoothed targets. Targets are
// (n_pos+1)/(n_pos+2) and 1/(n_neg+2) rather than raw 0/1.
Calibration fit_calibration(const std::vector<double>& margins,
                            const std::vector<int>& labels) {
  const std::size_t n = margins.size();
  double prior1 = 0;
  for (int y : labels) prior1 += y;
  double prior0 = static_cast<double>(n) - prior1;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);

  // internal convention: P(positive) = 1 / (1 + exp(A*f + B))
  double A = 0;
  double B = std::log((prior0 + 1.0) / (prior1 + 1.0));

  auto objective = [&](double A_, double B_) {
    double fval = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double fApB = margins[i] * A_ + B_;
      double t = labels[i] ? hi : lo;
      if (fApB >= 0)
        fval += t * fApB + std::log1p(std::exp(-fApB));
      else
        fval += (t - 1.0) * fApB + std::log1p(std::exp(fApB));
    }
    return fval;
  };

  double fval = objective(A, B);
  for (int iter = 0; iter < 100; ++iter) {
    double h11 = 1e-12, h22 = 1e-12, h21 = 0, g1 = 0, g2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double m = margins[i];
      double fApB = m * A + B;
      double p, q;
      if (fApB >= 0) {
        double e = std::exp(-fApB);
        p = e / (1.0 + e);
        q = 1.0 / (1.0 + e);
      } else {
        double e = std::exp(fApB);
        p = 1.0 / (1.0 + e);
        q = e / (1.0 + e);
      }
      double d2 = p * q;
      h11 += m * m * d2;
      h22 += d2;
      h21 += m * d2;
      double d1 = (labels[i] ? hi : lo) - p;
      g1 += m * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
    double det = h11 * h22 - h21 * h21;
    double dA = -(h22 * g1 - h21 * g2) / det;
    double dB = -(-h21 * g1 + h11 * g2) / det;
    double gd = g1 * dA + g2 * dB;
    double step = 1.0;
    bool moved = false;
    while (step >= 1e-10) {
      double nA = A + step * dA;
      double nB = B + step * dB;
      double nf = objective(nA, nB);
      if (nf < fval + 1e-4 * step * gd) {
        A = nA;
        B = nB;
        fval = nf;
        moved = true;
        break;
      }
      step /= 2;
    }
    if (!moved) break;
  }
  return {-A, -B};
}

void validate_columns(const SparseVector& x, std::uint32_t dim) {
  if (!x.entries.empty() && x.entries.back().first >= dim)
    throw DataError("feature column " + std::to_string(x.entries.back().first) +
                    " outside dimension " + std::to_string(dim));
}

}  // namespace

LinearModel train_linear(const std::vector<SparseVector>& X,
                         const std::vector<int>& y, std::uint32_t dim,
                         const LinearParams& params) {
  if (X.size() != y.size()) throw UsageError("feature and label counts differ");
  if (X.empty()) throw UsageError("cannot train on an empty set");
  if (params.l2 <= 0) throw UsageError("l2 must be positive");
  if (params.epochs < 1) throw UsageError("epochs must be positive");
  if (params.calibration_fraction < 0 || params.calibration_fraction > 0.5)
    throw UsageError("calibration_fraction must lie in [0, 0.5]");
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw DataError("labels must be 0 or 1");
    (y[i] ? has_pos : has_neg) = true;
    validate_columns(X[i], dim);
  }
  if (!has_pos || !has_neg) throw DataError("training labels are single-class");

  const std::size_t n = X.size();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  util::Rng calib_rng(util::derive_seed(params.seed, "linear.calib"));
  calib_rng.shuffle(perm);
  auto n_calib = static_cast<std::size_t>(
      std::ceil(params.calibration_fraction * static_cast<double>(n)));
  if (n_calib >= n) n_calib = n - 1;
  std::vector<std::size_t> calib_idx(perm.begin(),
                                     perm.begin() + static_cast<std::ptrdiff_t>(n_calib));
  std::vector<std::size_t> train_idx(perm.begin() + static_cast<std::ptrdiff_t>(n_calib),
                                     perm.end());

  has_pos = has_neg = false;
  for (std::size_t i : train_idx) (y[i] ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw DataError("labels became single-class after the calibration holdout");

  // w is stored as s * v so the per-step decay touches one scalar
  std::vector<double> v(dim, 0.0);
  double s = 1.0;
  double bias = 0.0;
  std::int64_t t = 0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    util::Rng epoch_rng(util::derive_seed(params.seed, "linear.shuffle",
                                          static_cast<std::uint64_t>(epoch)));
    epoch_rng.shuffle(train_idx);
    for (std::size_t i : train_idx) {
      ++t;
      const double eta = 1.0 / (params.l2 * static_cast<double>(t));
      const double decay = 1.0 - 1.0 / static_cast<double>(t);
      if (decay <= 0)
        s = 1.0;
      else
        s *= decay;
      if (s < 1e-100) {
        for (auto& w : v) w *= s;
        s = 1.0;
      }
      const double yi = y[i] ? 1.0 : -1.0;
      const double margin = s * dot(X[i], v) + bias;
      double coef = 0;
      if (params.loss == LossKind::Hinge) {
        if (yi * margin < 1.0) coef = eta * yi;
      } else {
        coef = eta * yi * sigmoid(-yi * margin);
      }
      if (coef != 0) {
        const double scaled = coef / s;
        for (const auto& [col, val] : X[i].entries) v[col] += scaled * val;
        bias += coef;
      }
    }
  }

  LinearModel model;
  model.dim = dim;
  model.weights.resize(dim);
  for (std::uint32_t c = 0; c < dim; ++c) model.weights[c] = s * v[c];
  model.bias = bias;

  if (!calib_idx.empty()) {
    std::vector<double> margins(calib_idx.size());
    std::vector<int> labels(calib_idx.size());
    for (std::size_t k = 0; k < calib_idx.size(); ++k) {
      margins[k] = model.margin(X[calib_idx[k]]);
      labels[k] = y[calib_idx[k]];
    }
    auto cal = fit_calibration(margins, labels);
    model.cal_a = cal.a;
    model.cal_b = cal.b;
  }
  return model;
}

double predict_score(const LinearModel& model, const SparseVector& x) {
  validate_columns(x, model.dim);
  double p = sigmoid(model.cal_a * model.margin(x) + model.cal_b);
  return std::min(1.0 - 1e-12, std::max(1e-12, p));
}

std::string models_to_json(const std::array<LinearModel, kNumEngagementTypes>& models) {
  nlohmann::json root = nlohmann::json::array();
  for (EngagementType type : kAllEngagementTypes) {
    const auto& m = models[static_cast<std::size_t>(type)];
    nlohmann::json weights = nlohmann::json::array();
    for (std::uint32_t c = 0; c < m.dim; ++c)
      if (m.weights[c] != 0) weights.push_back({c, m.weights[c]});
    root.push_back({{"engagement", to_string(type)},
                    {"dim", m.dim},
                    {"bias", m.bias},
                    {"cal_a", m.cal_a},
                    {"cal_b", m.cal_b},
                    {"weights", std::move(weights)}});
  }
  return root.dump(2);
}

std::array<LinearModel, kNumEngagementTypes> models_from_json(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad model JSON: ") + e.what());
  }
  if (!root.is_array() || root.size() != kNumEngagementTypes)
    throw DataError("model JSON must hold one model per engagement type");
  std::array<LinearModel, kNumEngagementTypes> models;
  try {
    for (std::size_t i = 0; i < kNumEngagementTypes; ++i) {
      const auto& j = root[i];
      if (j.at("engagement").get<std::string>() !=
          to_string(kAllEngagementTypes[i]))
        throw DataError("model JSON out of engagement order");
      LinearModel m;
      m.dim = j.at("dim").get<std::uint32_t>();
      m.bias = j.at("bias").get<double>();
      m.cal_a = j.at("cal_a").get<double>();
      m.cal_b = j.at("cal_b").get<double>();
      m.weights.assign(m.dim, 0.0);
      for (const auto& entry : j.at("weights")) {
        auto col = entry.at(0).get<std::uint32_t>();
        if (col >= m.dim) throw DataError("weight column outside dimension");
        m.weights[col] = entry.at(1).get<double>();
      }
      models[i] = std::move(m);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad model JSON: ") + e.what());
  }
  return models;
}

std::array<LinearModel, kNumEngagementTypes> train_content_models(
    const TfidfVocabulary& vocab, const std::vector<EngagementRecord>& records,
    const LinearParams& params) {
  if (records.empty()) throw UsageError("cannot train content models on no records");
  std::vector<SparseVector> X;
  X.reserve(records.size());
  for (const auto& r : records) X.push_back(vocab.transform(r.text_tokens));

  std::array<LinearModel, kNumEngagementTypes> models;
  for (EngagementType type : kAllEngagementTypes) {
    std::vector<int> y(records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
      y[i] = records[i].has_engagement(type) ? 1 : 0;
    LinearParams per_type = params;
    per_type.seed = util::derive_seed(params.seed, "content.train",
                                      static_cast<std::uint64_t>(type));
    models[static_cast<std::size_t>(type)] =
        train_linear(X, y, static_cast<std::uint32_t>(vocab.size()), per_type);
  }
  return models;
}

FeatureBlock content_block(const TfidfVocabulary& vocab,
                           const std::array<LinearModel, kNumEngagementTypes>& models,
                           const std::vector<EngagementRecord>& records) {
  static const char* kNames[kNumEngagementTypes] = {
      "d4.score_reply", "d4.score_retweet", "d4.score_quote", "d4.score_like"};
  const std::size_t n = records.size();
  std::array<std::vector<double>, kNumEngagementTypes> cols;
  for (auto& c : cols) c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = vocab.transform(records[i].text_tokens);
    for (std::size_t e = 0; e < kNumEngagementTypes; ++e)
      cols[e][i] = predict_score(models[e], x);
  }
  FeatureBlock block;
  for (std::size_t e = 0; e < kNumEngagementTypes; ++e)
    block.add_column(kNames[e], std::move(cols[e]));
  return block;
}

}  // namespace engpred::content
