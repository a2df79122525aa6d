#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "engpred/feature_block.hpp"
#include "engpred/kg.hpp"
#include "engpred/types.hpp"

namespace engpred::embedding {

struct SgnsParams {
  int dimension = 64;
  int window = 5;     // context radius; per-center radius sampled in [1, window]
  int negatives = 5;  // negative samples per (center, context) pair
  int epochs = 5;
  double learning_rate = 0.025;  // decays linearly over processed tokens
  std::uint64_t seed = 1;
  int threads = 1;  // > 1 trades determinism for lock-free parallel updates
};

// Skip-gram with negative sampling over walk corpora. Input vectors start
// uniform in [-0.5/dim, +0.5/dim], context vectors at zero; negatives come
// from the unigram^(3/4) distribution over nodes. Returns the input vectors,
// node-id indexed, dimension floats per node. Deterministic for threads == 1.
struct SgnsResult {
  int dimension = 0;
  std::vector<float> vectors;        // node_count x dimension, row-major
  std::vector<double> epoch_losses;  // mean pair loss per epoch
};

SgnsResult train_sgns(const std::vector<std::vector<int>>& walks, int node_count,
                      const SgnsParams& params);

class EmbeddingTable {
 public:
  explicit EmbeddingTable(int dimension);

  int dimension() const { return dim_; }
  std::size_t size() const { return map_.size(); }

  void put(const kg::NodeKey& key, std::vector<float> vec);
  const std::vector<float>* find(const kg::NodeKey& key) const;

  // Text format: header "count dimension", then one line per node,
  // "Namespace:local_id v1 ... vd", sorted by key. Values round-trip exactly.
  void export_text(const std::string& path) const;
  static EmbeddingTable import_text(const std::string& path);

  std::vector<kg::NodeKey> sorted_keys() const;

 private:
  int dim_;
  std::unordered_map<kg::NodeKey, std::vector<float>, kg::NodeKeyHash> map_;
};

// Walks + training glued to graph node identity.
EmbeddingTable train_embeddings(const kg::TypedGraph& graph,
                                const std::vector<std::vector<int>>& walks,
                                const SgnsParams& params,
                                std::vector<double>* epoch_losses = nullptr);

// One D2 row: reader vector | author vector | tweet vector. Unseen users fall
// back to zeros; an unseen tweet falls back to the mean of its known
// attribute vectors (hashtags, domains, language, tweet type), else zeros.
std::vector<double> embed_record(const EmbeddingTable& table,
                                 const EngagementRecord& record);

// Rows aligned to the input order; columns d2.reader_i, d2.author_i, d2.tweet_i.
FeatureBlock embed_block(const EmbeddingTable& table,
                         const std::vector<EngagementRecord>& records);

}  // namespace engpred::embedding
