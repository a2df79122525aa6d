#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "engpred/types.hpp"

namespace engpred::kg {

// Audience buckets by follower count, inclusive upper bounds; counts above the
// last bound clamp to class 7.
int follower_class(std::int64_t follower_count);

enum class NodeNamespace : std::uint8_t {
  User,
  Tweet,
  Hashtag,
  Domain,
  Language,
  TweetType,
  Media,
  FollowerClass,
};
inline constexpr int kNumNodeNamespaces = 8;

std::string_view to_string(NodeNamespace ns);
NodeNamespace namespace_from_string(std::string_view text);

struct NodeKey {
  NodeNamespace ns = NodeNamespace::User;
  std::string local_id;

  bool operator==(const NodeKey&) const = default;
  auto operator<=>(const NodeKey&) const = default;
};

struct NodeKeyHash {
  std::size_t operator()(const NodeKey& k) const;
};

enum class EdgeType : std::uint8_t {
  Follow,
  Write,
  Like,
  Reply,
  Retweet,
  Quote,
  HasType,
  HasMedia,
  HasLang,
  HasHashtag,
  HasDomain,
  HasClass,
};
inline constexpr int kNumEdgeTypes = 12;

std::string_view to_string(EdgeType type);
EdgeType edge_type_from_string(std::string_view text);

struct EdgeRule {
  bool enabled = true;
  double weight = 1.0;
};

// Per edge type: on/off plus weight. Relational edges default to 1.0,
// attribute (has_*) edges to 0.5.
struct EdgeConfig {
  std::array<EdgeRule, kNumEdgeTypes> rules;

  EdgeConfig();

  const EdgeRule& rule(EdgeType t) const {
    return rules[static_cast<std::size_t>(t)];
  }
  EdgeRule& rule(EdgeType t) { return rules[static_cast<std::size_t>(t)]; }

  // Minimal relation set: follow, write, like, has_domain, has_hashtag.
  static EdgeConfig lean();

  std::string to_json() const;
  // Accepts {"preset": "full"|"lean"} plus per-type {"enabled", "weight"}
  // overrides keyed by edge type name.
  static EdgeConfig from_json(const std::string& text);
};

struct Edge {
  EdgeType type;
  int src = 0;
  int dst = 0;
  double weight = 1.0;
};

// Heterogeneous graph with interned nodes. Edges keep their direction and
// type; for walks the graph is treated as undirected and parallel edges
// between the same endpoints sum their weights.
class TypedGraph {
 public:
  int intern(const NodeKey& key);
  std::optional<int> find(const NodeKey& key) const;
  const NodeKey& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }

  // Returns false when an edge with the same (type, source, target) already
  // exists; the duplicate is dropped and weights are not accumulated.
  bool add_edge(EdgeType type, const NodeKey& src, const NodeKey& dst, double weight);

  // Builds the undirected adjacency used by walks. Must run after the last
  // add_edge; neighbor lists are sorted by node id.
  void finalize();
  bool finalized() const { return finalized_; }
  const std::vector<std::pair<int, double>>& neighbors(int id) const;
  bool adjacent(int a, int b) const;

  void export_tsv(const std::string& path) const;
  static TypedGraph import_tsv(const std::string& path);

 private:
  std::vector<NodeKey> nodes_;
  std::unordered_map<NodeKey, int, NodeKeyHash> index_;
  std::vector<Edge> edges_;
  std::unordered_set<std::uint64_t> edge_seen_;
  std::vector<std::vector<std::pair<int, double>>> adj_;
  bool finalized_ = false;
};

TypedGraph build_graph(const std::vector<EngagementRecord>& records,
                       const EdgeConfig& config);

struct WalkParams {
  double p = 1.0;  // return parameter
  double q = 1.0;  // in-out parameter
  int walk_length = 40;
  int walks_per_node = 10;
  std::uint64_t seed = 1;
  int threads = 1;
};

// walks_per_node walks from every node, each under its own derived seed so
// the result is independent of thread count. Isolated nodes yield length-1
// walks. Step bias: weight times 1/p when the candidate is the previous
// node, 1 when it neighbors the previous node, 1/q otherwise.
std::vector<std::vector<int>> generate_walks(const TypedGraph& graph,
                                             const WalkParams& params);

}  // namespace engpred::kg
