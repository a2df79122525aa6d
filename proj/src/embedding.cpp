#include "engpred/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "engpred/errors.hpp"
#include "engpred/util.hpp"

namespace engpred::embedding {

namespace {

constexpr int kExpTableSize = 1000;
constexpr float kMaxExp = 6.0f;

// Precomputed sigmoid and log-sigmoid over [-6, 6); the hot loop never calls
// exp or log.
struct SigmoidTable {
  float sig[kExpTableSize];
  float log_sig[kExpTableSize];
  SigmoidTable() {
    for (int i = 0; i < kExpTableSize; ++i) {
      double u = (static_cast<double>(i) / kExpTableSize * 2.0 - 1.0) * kMaxExp;
      double e = std::exp(u);
      double s = e / (1.0 + e);
      sig[i] = static_cast<float>(s);
      log_sig[i] = static_cast<float>(std::log(std::max(s, 1e-7)));
    }
  }
  int index(float u) const {
    float idx = (u + kMaxExp) * (kExpTableSize / kMaxExp / 2.0f);
    if (idx < 0) return 0;
    if (idx >= kExpTableSize) return kExpTableSize - 1;
    return static_cast<int>(idx);
  }
  float sigmoid(float u) const {
    if (u > kMaxExp) return 1.0f;
    if (u < -kMaxExp) return 0.0f;
    return sig[index(u)];
  }
  float neg_log_sigmoid(float u) const { return -log_sig[index(u)]; }
};

const SigmoidTable& sigmoid_table() {
  static const SigmoidTable table;
  return table;
}

float dot(const float* a, const float* b, int n) {
  float s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

void axpy(float* y, float g, const float* x, int n) {
  for (int i = 0; i < n; ++i) y[i] += g * x[i];
}

int sample_unigram(util::Rng& rng, const std::vector<double>& cum) {
  double u = rng.uniform01() * cum.back();
  auto it = std::upper_bound(cum.begin(), cum.end(), u);
  auto idx = static_cast<std::size_t>(it - cum.begin());
  if (idx >= cum.size()) idx = cum.size() - 1;
  return static_cast<int>(idx);
}

}  // namespace

SgnsResult train_sgns(const std::vector<std::vector<int>>& walks, int node_count,
                      const SgnsParams& params) {
  if (params.dimension < 1 || params.window < 1 || params.negatives < 1 ||
      params.epochs < 1)
    throw UsageError("dimension, window, negatives and epochs must be positive");
  if (params.learning_rate <= 0) throw UsageError("learning rate must be positive");
  if (node_count < 1) throw UsageError("need at least one node");
  if (walks.empty()) throw UsageError("cannot train embeddings without walks");

  const int dim = params.dimension;
  const auto n = static_cast<std::size_t>(node_count);

  std::vector<std::int64_t> counts(n, 0);
  std::vector<std::size_t> token_offset(walks.size() + 1, 0);
  for (std::size_t w = 0; w < walks.size(); ++w) {
    for (int id : walks[w]) {
      if (id < 0 || id >= node_count) throw DataError("walk node id out of range");
      ++counts[static_cast<std::size_t>(id)];
    }
    token_offset[w + 1] = token_offset[w] + walks[w].size();
  }
  const std::size_t total_tokens = token_offset.back();
  if (total_tokens == 0) throw UsageError("walks contain no tokens");

  // negatives ~ unigram^(3/4)
  std::vector<double> cum(n);
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += std::pow(static_cast<double>(counts[i]), 0.75);
    cum[i] = acc;
  }

  std::vector<float> syn0(n * static_cast<std::size_t>(dim));
  std::vector<float> syn1(n * static_cast<std::size_t>(dim), 0.0f);
  util::Rng init_rng(util::derive_seed(params.seed, "sgns.init"));
  for (auto& v : syn0)
    v = static_cast<float>((init_rng.uniform01() - 0.5) / dim);

  const auto& tbl = sigmoid_table();
  const double total_steps =
      static_cast<double>(total_tokens) * params.epochs + 1.0;
  const double min_alpha = params.learning_rate * 1e-4;

  SgnsResult result;
  result.dimension = dim;

  std::vector<double> walk_loss(walks.size());
  std::vector<std::int64_t> walk_pairs(walks.size());

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::fill(walk_loss.begin(), walk_loss.end(), 0.0);
    std::fill(walk_pairs.begin(), walk_pairs.end(), 0);

    util::parallel_for(walks.size(), params.threads, [&](std::size_t wi) {
      const auto& walk = walks[wi];
      if (walk.empty()) return;
      util::Rng rng(util::derive_seed(
          params.seed, "sgns.train",
          static_cast<std::uint64_t>(epoch) * walks.size() + wi));
      double loss = 0;
      std::int64_t pairs = 0;
      std::vector<float> neu1e(static_cast<std::size_t>(dim));
      // alpha depends only on the token's fixed global position
      const double epoch_base =
          static_cast<double>(epoch) * static_cast<double>(total_tokens);

      for (std::size_t pos = 0; pos < walk.size(); ++pos) {
        double done = epoch_base + static_cast<double>(token_offset[wi] + pos);
        double alpha = params.learning_rate * (1.0 - done / total_steps);
        if (alpha < min_alpha) alpha = min_alpha;
        const int center = walk[pos];
        const int radius =
            1 + static_cast<int>(rng.uniform_int(
                    static_cast<std::uint64_t>(params.window)));
        for (int off = -radius; off <= radius; ++off) {
          if (off == 0) continue;
          std::ptrdiff_t cpos = static_cast<std::ptrdiff_t>(pos) + off;
          if (cpos < 0 || cpos >= static_cast<std::ptrdiff_t>(walk.size())) continue;
          float* v_in =
              &syn0[static_cast<std::size_t>(walk[static_cast<std::size_t>(cpos)]) *
                    static_cast<std::size_t>(dim)];
          std::fill(neu1e.begin(), neu1e.end(), 0.0f);
          for (int k = 0; k <= params.negatives; ++k) {
            int target;
            float label;
            if (k == 0) {
              target = center;
              label = 1.0f;
            } else {
              target = sample_unigram(rng, cum);
              if (target == center) continue;
              label = 0.0f;
            }
            float* v_out = &syn1[static_cast<std::size_t>(target) *
                                 static_cast<std::size_t>(dim)];
            float f = dot(v_in, v_out, dim);
            float g = (label - tbl.sigmoid(f)) * static_cast<float>(alpha);
            loss += tbl.neg_log_sigmoid(label == 1.0f ? f : -f);
            axpy(neu1e.data(), g, v_out, dim);
            axpy(v_out, g, v_in, dim);
          }
          axpy(v_in, 1.0f, neu1e.data(), dim);
          ++pairs;
        }
      }
      walk_loss[wi] = loss;
      walk_pairs[wi] = pairs;
    });

    double loss_sum = 0;
    std::int64_t pair_sum = 0;
    for (std::size_t w = 0; w < walks.size(); ++w) {
      loss_sum += walk_loss[w];
      pair_sum += walk_pairs[w];
    }
    result.epoch_losses.push_back(pair_sum > 0 ? loss_sum / static_cast<double>(pair_sum)
                                               : 0.0);
  }

  result.vectors = std::move(syn0);
  return result;
}

EmbeddingTable::EmbeddingTable(int dimension) : dim_(dimension) {
  if (dimension < 1) throw UsageError("embedding dimension must be positive");
}

void EmbeddingTable::put(const kg::NodeKey& key, std::vector<float> vec) {
  if (static_cast<int>(vec.size()) != dim_)
    throw DataError("vector dimension mismatch for " + key.local_id);
  for (float v : vec)
    if (!std::isfinite(v)) throw DataError("non-finite embedding for " + key.local_id);
  map_[key] = std::move(vec);
}

const std::vector<float>* EmbeddingTable::find(const kg::NodeKey& key) const {
  auto it = map_.find(key);
  return it == map_.end() ? nullptr : &it->second;
}

std::vector<kg::NodeKey> EmbeddingTable::sorted_keys() const {
  std::vector<kg::NodeKey> keys;
  keys.reserve(map_.size());
  for (const auto& [k, v] : map_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  return keys;
}

void EmbeddingTable::export_text(const std::string& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  f << map_.size() << ' ' << dim_ << '\n';
  char buf[32];
  for (const auto& key : sorted_keys()) {
    f << kg::to_string(key.ns) << ':' << key.local_id;
    for (float v : map_.at(key)) {
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
      f << ' ' << buf;
    }
    f << '\n';
  }
  if (!f) throw DataError("write failed: " + path);
}

EmbeddingTable EmbeddingTable::import_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  std::string line;
  if (!std::getline(f, line)) throw DataError("empty embedding file: " + path);
  std::size_t count = 0;
  int dim = 0;
  {
    std::istringstream head(line);
    if (!(head >> count >> dim) || dim < 1)
      throw ParseError("bad embedding header", 1, -1);
  }
  EmbeddingTable table(dim);
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto sp = line.find(' ');
    auto colon = line.find(':');
    if (colon == std::string::npos || sp == std::string::npos || colon > sp)
      throw ParseError("bad embedding row", line_no, 0);
    kg::NodeKey key{kg::namespace_from_string(line.substr(0, colon)),
                    line.substr(colon + 1, sp - colon - 1)};
    std::vector<float> vec;
    vec.reserve(static_cast<std::size_t>(dim));
    std::istringstream rest(line.substr(sp + 1));
    float v;
    while (rest >> v) vec.push_back(v);
    if (static_cast<int>(vec.size()) != dim)
      throw ParseError("wrong vector length", line_no, 1);
    table.put(key, std::move(vec));
  }
  if (table.size() != count)
    throw DataError("embedding count mismatch in " + path);
  return table;
}

EmbeddingTable train_embeddings(const kg::TypedGraph& graph,
                                const std::vector<std::vector<int>>& walks,
                                const SgnsParams& params,
                                std::vector<double>* epoch_losses) {
  auto result = train_sgns(walks, graph.node_count(), params);
  if (epoch_losses) *epoch_losses = result.epoch_losses;
  EmbeddingTable table(params.dimension);
  const auto dim = static_cast<std::size_t>(params.dimension);
  for (int id = 0; id < graph.node_count(); ++id) {
    std::vector<float> vec(result.vectors.begin() + static_cast<std::ptrdiff_t>(id * dim),
                           result.vectors.begin() +
                               static_cast<std::ptrdiff_t>((id + 1) * dim));
    table.put(graph.node(id), std::move(vec));
  }
  return table;
}

namespace {

void write_slot(std::vector<double>& row, std::size_t offset,
                const std::vector<float>* vec, int dim) {
  if (!vec) return;  // slot stays zero
  for (int i = 0; i < dim; ++i)
    row[offset + static_cast<std::size_t>(i)] = (*vec)[static_cast<std::size_t>(i)];
}

// Mean of the tweet's known attribute vectors; nullopt-equivalent when none.
std::vector<float> attribute_mean(const EmbeddingTable& table,
                                  const EngagementRecord& r, bool* found) {
  const int dim = table.dimension();
  std::vector<double> sum(static_cast<std::size_t>(dim), 0.0);
  int n = 0;
  auto add = [&](const kg::NodeKey& key) {
    if (const auto* v = table.find(key)) {
      for (int i = 0; i < dim; ++i) sum[static_cast<std::size_t>(i)] += (*v)[static_cast<std::size_t>(i)];
      ++n;
    }
  };
  for (const auto& h : r.hashtags) add({kg::NodeNamespace::Hashtag, h});
  for (const auto& d : r.present_domains) add({kg::NodeNamespace::Domain, d});
  add({kg::NodeNamespace::Language, r.language});
  add({kg::NodeNamespace::TweetType, std::string(to_string(r.tweet_type))});

  *found = n > 0;
  std::vector<float> mean(static_cast<std::size_t>(dim), 0.0f);
  if (n > 0)
    for (int i = 0; i < dim; ++i)
      mean[static_cast<std::size_t>(i)] =
          static_cast<float>(sum[static_cast<std::size_t>(i)] / n);
  return mean;
}

}  // namespace

std::vector<double> embed_record(const EmbeddingTable& table,
                                 const EngagementRecord& record) {
  const int dim = table.dimension();
  std::vector<double> row(3 * static_cast<std::size_t>(dim), 0.0);
  write_slot(row, 0, table.find({kg::NodeNamespace::User, record.reader.user_id}), dim);
  write_slot(row, static_cast<std::size_t>(dim),
             table.find({kg::NodeNamespace::User, record.author.user_id}), dim);
  const auto* tweet = table.find({kg::NodeNamespace::Tweet, record.tweet_id});
  if (tweet) {
    write_slot(row, 2 * static_cast<std::size_t>(dim), tweet, dim);
  } else {
    bool found = false;
    auto mean = attribute_mean(table, record, &found);
    if (found) write_slot(row, 2 * static_cast<std::size_t>(dim), &mean, dim);
  }
  return row;
}

FeatureBlock embed_block(const EmbeddingTable& table,
                         const std::vector<EngagementRecord>& records) {
  const int dim = table.dimension();
  const std::size_t n = records.size();
  const std::size_t n_cols = 3 * static_cast<std::size_t>(dim);
  std::vector<std::vector<double>> cols(n_cols, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    auto row = embed_record(table, records[i]);
    for (std::size_t c = 0; c < n_cols; ++c) cols[c][i] = row[c];
  }
  FeatureBlock block;
  static const char* kSlots[3] = {"d2.reader_", "d2.author_", "d2.tweet_"};
  for (int slot = 0; slot < 3; ++slot)
    for (int i = 0; i < dim; ++i)
      block.add_column(kSlots[slot] + std::to_string(i),
                       std::move(cols[static_cast<std::size_t>(slot * dim + i)]));
  return block;
}

}  // namespace engpred::embedding
