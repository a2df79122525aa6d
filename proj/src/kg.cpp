#include "engpred/kg.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "engpred/errors.hpp"
#include "engpred/util.hpp"

namespace engpred::kg {

int follower_class(std::int64_t follower_count) {
  static constexpr std::int64_t kBounds[] = {150,     500,       1'000,      10'000,
                                             100'000, 1'000'000, 10'000'000, 200'000'000};
  for (int i = 0; i < 8; ++i)
    if (follower_count <= kBounds[i]) return i;
  return 7;
}

std::string_view to_string(NodeNamespace ns) {
  switch (ns) {
    case NodeNamespace::User: return "User";
    case NodeNamespace::Tweet: return "Tweet";
    case NodeNamespace::Hashtag: return "Hashtag";
    case NodeNamespace::Domain: return "Domain";
    case NodeNamespace::Language: return "Language";
    case NodeNamespace::TweetType: return "TweetType";
    case NodeNamespace::Media: return "Media";
    case NodeNamespace::FollowerClass: return "FollowerClass";
  }
  return "?";
}

NodeNamespace namespace_from_string(std::string_view text) {
  for (int i = 0; i < kNumNodeNamespaces; ++i) {
    auto ns = static_cast<NodeNamespace>(i);
    if (text == to_string(ns)) return ns;
  }
  throw DataError("unknown node namespace: " + std::string(text));
}

std::string_view to_string(EdgeType type) {
  switch (type) {
    case EdgeType::Follow: return "follow";
    case EdgeType::Write: return "write";
    case EdgeType::Like: return "like";
    case EdgeType::Reply: return "reply";
    case EdgeType::Retweet: return "retweet";
    case EdgeType::Quote: return "quote";
    case EdgeType::HasType: return "has_type";
    case EdgeType::HasMedia: return "has_media";
    case EdgeType::HasLang: return "has_lang";
    case EdgeType::HasHashtag: return "has_hashtag";
    case EdgeType::HasDomain: return "has_domain";
    case EdgeType::HasClass: return "has_class";
  }
  return "?";
}

EdgeType edge_type_from_string(std::string_view text) {
  for (int i = 0; i < kNumEdgeTypes; ++i) {
    auto t = static_cast<EdgeType>(i);
    if (text == to_string(t)) return t;
  }
  throw DataError("unknown edge type: " + std::string(text));
}

namespace {

bool is_attribute_edge(EdgeType t) {
  return static_cast<int>(t) >= static_cast<int>(EdgeType::HasType);
}

// Endpoint namespaces each edge type is allowed to connect.
std::pair<NodeNamespace, NodeNamespace> endpoint_spec(EdgeType t) {
  switch (t) {
    case EdgeType::Follow: return {NodeNamespace::User, NodeNamespace::User};
    case EdgeType::Write:
    case EdgeType::Like:
    case EdgeType::Reply:
    case EdgeType::Retweet:
    case EdgeType::Quote: return {NodeNamespace::User, NodeNamespace::Tweet};
    case EdgeType::HasType: return {NodeNamespace::Tweet, NodeNamespace::TweetType};
    case EdgeType::HasMedia: return {NodeNamespace::Tweet, NodeNamespace::Media};
    case EdgeType::HasLang: return {NodeNamespace::Tweet, NodeNamespace::Language};
    case EdgeType::HasHashtag: return {NodeNamespace::Tweet, NodeNamespace::Hashtag};
    case EdgeType::HasDomain: return {NodeNamespace::Tweet, NodeNamespace::Domain};
    case EdgeType::HasClass: return {NodeNamespace::User, NodeNamespace::FollowerClass};
  }
  return {NodeNamespace::User, NodeNamespace::User};
}

}  // namespace

EdgeConfig::EdgeConfig() {
  for (int i = 0; i < kNumEdgeTypes; ++i) {
    auto t = static_cast<EdgeType>(i);
    rules[static_cast<std::size_t>(i)] = {true, is_attribute_edge(t) ? 0.5 : 1.0};
  }
}

EdgeConfig EdgeConfig::lean() {
  EdgeConfig c;
  for (int i = 0; i < kNumEdgeTypes; ++i)
    c.rules[static_cast<std::size_t>(i)].enabled = false;
  for (EdgeType t : {EdgeType::Follow, EdgeType::Write, EdgeType::Like,
                     EdgeType::HasDomain, EdgeType::HasHashtag})
    c.rule(t).enabled = true;
  return c;
}

std::string EdgeConfig::to_json() const {
  nlohmann::json j;
  for (int i = 0; i < kNumEdgeTypes; ++i) {
    auto t = static_cast<EdgeType>(i);
    j[std::string(to_string(t))] = {{"enabled", rule(t).enabled},
                                    {"weight", rule(t).weight}};
  }
  return j.dump(2);
}

EdgeConfig EdgeConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad edge config JSON: ") + e.what());
  }
  EdgeConfig c;
  if (j.contains("preset")) {
    auto preset = j.at("preset").get<std::string>();
    if (preset == "lean")
      c = EdgeConfig::lean();
    else if (preset != "full")
      throw UsageError("unknown edge config preset: " + preset);
  }
  for (int i = 0; i < kNumEdgeTypes; ++i) {
    auto t = static_cast<EdgeType>(i);
    auto key = std::string(to_string(t));
    if (!j.contains(key)) continue;
    const auto& e = j.at(key);
    c.rule(t).enabled = e.value("enabled", c.rule(t).enabled);
    c.rule(t).weight = e.value("weight", c.rule(t).weight);
    if (c.rule(t).weight <= 0) throw UsageError("edge weight must be positive: " + key);
  }
  return c;
}

std::size_t NodeKeyHash::operator()(const NodeKey& k) const {
  std::uint64_t h = util::fnv1a64(k.local_id);
  return static_cast<std::size_t>(
      util::splitmix64(h ^ static_cast<std::uint64_t>(k.ns)));
}

int TypedGraph::intern(const NodeKey& key) {
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(key);
  index_.emplace(key, id);
  return id;
}

std::optional<int> TypedGraph::find(const NodeKey& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool TypedGraph::add_edge(EdgeType type, const NodeKey& src, const NodeKey& dst,
                          double weight) {
  if (weight <= 0) throw DataError("edge weight must be positive");
  auto [want_src, want_dst] = endpoint_spec(type);
  if (src.ns != want_src || dst.ns != want_dst)
    throw DataError(std::string("edge type ") + std::string(to_string(type)) +
                    " cannot connect " + std::string(to_string(src.ns)) + " to " +
                    std::string(to_string(dst.ns)));
  int s = intern(src);
  int d = intern(dst);
  // (type, src, dst) packed into one dedupe key; node ids stay < 2^30 here
  std::uint64_t key = (static_cast<std::uint64_t>(type) << 60) |
                      (static_cast<std::uint64_t>(s) << 30) |
                      static_cast<std::uint64_t>(d);
  if (!edge_seen_.insert(key).second) return false;
  edges_.push_back({type, s, d, weight});
  finalized_ = false;
  return true;
}

void TypedGraph::finalize() {
  adj_.assign(nodes_.size(), {});
  for (const auto& e : edges_) {
    adj_[static_cast<std::size_t>(e.src)].emplace_back(e.dst, e.weight);
    adj_[static_cast<std::size_t>(e.dst)].emplace_back(e.src, e.weight);
  }
  for (auto& nbrs : adj_) {
    std::sort(nbrs.begin(), nbrs.end());
    // merge parallel edges between the same endpoints
    std::size_t out = 0;
    for (std::size_t i = 0; i < nbrs.size();) {
      std::size_t j = i;
      double w = 0;
      while (j < nbrs.size() && nbrs[j].first == nbrs[i].first) w += nbrs[j++].second;
      nbrs[out++] = {nbrs[i].first, w};
      i = j;
    }
    nbrs.resize(out);
  }
  finalized_ = true;
}

const std::vector<std::pair<int, double>>& TypedGraph::neighbors(int id) const {
  if (!finalized_) throw DataError("graph not finalized");
  return adj_[static_cast<std::size_t>(id)];
}

bool TypedGraph::adjacent(int a, int b) const {
  const auto& nbrs = neighbors(a);
  auto it = std::lower_bound(nbrs.begin(), nbrs.end(), b,
                             [](const auto& pr, int v) { return pr.first < v; });
  return it != nbrs.end() && it->first == b;
}

void TypedGraph::export_tsv(const std::string& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  char buf[32];
  for (const auto& e : edges_) {
    const auto& s = node(e.src);
    const auto& d = node(e.dst);
    std::snprintf(buf, sizeof(buf), "%.17g", e.weight);
    f << to_string(e.type) << '\t' << to_string(s.ns) << '\t' << s.local_id << '\t'
      << to_string(d.ns) << '\t' << d.local_id << '\t' << buf << '\n';
  }
  if (!f) throw DataError("write failed: " + path);
}

TypedGraph TypedGraph::import_tsv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  TypedGraph g;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = util::split_on(line, '\t');
    if (fields.size() != 6) throw ParseError("expected 6 fields", line_no, -1);
    NodeKey src{namespace_from_string(fields[1]), std::string(fields[2])};
    NodeKey dst{namespace_from_string(fields[3]), std::string(fields[4])};
    double w = 0;
    try {
      w = std::stod(std::string(fields[5]));
    } catch (const std::exception&) {
      throw ParseError("bad edge weight", line_no, 5);
    }
    g.add_edge(edge_type_from_string(fields[0]), src, dst, w);
  }
  g.finalize();
  return g;
}

TypedGraph build_graph(const std::vector<EngagementRecord>& records,
                       const EdgeConfig& config) {
  TypedGraph g;
  auto enabled = [&](EdgeType t) { return config.rule(t).enabled; };
  auto w = [&](EdgeType t) { return config.rule(t).weight; };

  for (const auto& r : records) {
    NodeKey author{NodeNamespace::User, r.author.user_id};
    NodeKey reader{NodeNamespace::User, r.reader.user_id};
    NodeKey tweet{NodeNamespace::Tweet, r.tweet_id};

    if (enabled(EdgeType::Write)) g.add_edge(EdgeType::Write, author, tweet, w(EdgeType::Write));
    if (enabled(EdgeType::Follow) && r.reader_follows_author)
      g.add_edge(EdgeType::Follow, reader, author, w(EdgeType::Follow));

    static constexpr EdgeType kEngagementEdge[kNumEngagementTypes] = {
        EdgeType::Reply, EdgeType::Retweet, EdgeType::Quote, EdgeType::Like};
    for (auto t : kAllEngagementTypes) {
      auto et = kEngagementEdge[static_cast<std::size_t>(t)];
      if (enabled(et) && r.engagement_ts(t)) g.add_edge(et, reader, tweet, w(et));
    }

    if (enabled(EdgeType::HasType))
      g.add_edge(EdgeType::HasType, tweet,
                 {NodeNamespace::TweetType, std::string(to_string(r.tweet_type))},
                 w(EdgeType::HasType));
    if (enabled(EdgeType::HasLang))
      g.add_edge(EdgeType::HasLang, tweet, {NodeNamespace::Language, r.language},
                 w(EdgeType::HasLang));
    if (enabled(EdgeType::HasClass)) {
      g.add_edge(EdgeType::HasClass, author,
                 {NodeNamespace::FollowerClass,
                  std::to_string(follower_class(r.author.follower_count))},
                 w(EdgeType::HasClass));
      g.add_edge(EdgeType::HasClass, reader,
                 {NodeNamespace::FollowerClass,
                  std::to_string(follower_class(r.reader.follower_count))},
                 w(EdgeType::HasClass));
    }
    if (enabled(EdgeType::HasMedia) && !r.present_media.empty()) {
      int photos = 0;
      bool video = false, gif = false;
      for (auto m : r.present_media) {
        if (m == MediaType::Photo) ++photos;
        if (m == MediaType::Video) video = true;
        if (m == MediaType::GIF) gif = true;
      }
      std::vector<std::string> values;
      // a multi-photo tweet carries the distinct value "Photos"
      if (photos == 1) values.emplace_back("Photo");
      if (photos >= 2) values.emplace_back("Photos");
      if (video) values.emplace_back("Video");
      if (gif) values.emplace_back("GIF");
      for (const auto& v : values)
        g.add_edge(EdgeType::HasMedia, tweet, {NodeNamespace::Media, v},
                   w(EdgeType::HasMedia));
    }
    if (enabled(EdgeType::HasHashtag))
      for (const auto& h : r.hashtags)
        g.add_edge(EdgeType::HasHashtag, tweet, {NodeNamespace::Hashtag, h},
                   w(EdgeType::HasHashtag));
    if (enabled(EdgeType::HasDomain))
      for (const auto& d : r.present_domains)
        g.add_edge(EdgeType::HasDomain, tweet, {NodeNamespace::Domain, d},
                   w(EdgeType::HasDomain));
  }
  g.finalize();
  return g;
}

namespace {

// One biased step. prev < 0 means this is the first step (bias-free).
int step(const TypedGraph& g, int cur, int prev, double inv_p, double inv_q,
         util::Rng& rng) {
  const auto& nbrs = g.neighbors(cur);
  if (nbrs.empty()) return -1;
  double total = 0;
  auto bias = [&](int cand) {
    if (prev < 0) return 1.0;
    if (cand == prev) return inv_p;
    return g.adjacent(cand, prev) ? 1.0 : inv_q;
  };
  for (const auto& [cand, wt] : nbrs) total += wt * bias(cand);
  double r = rng.uniform01() * total;
  for (const auto& [cand, wt] : nbrs) {
    r -= wt * bias(cand);
    if (r <= 0) return cand;
  }
  return nbrs.back().first;
}

}  // namespace

std::vector<std::vector<int>> generate_walks(const TypedGraph& graph,
                                             const WalkParams& params) {
  if (params.p <= 0 || params.q <= 0) throw UsageError("walk parameters p, q must be positive");
  if (params.walk_length < 1 || params.walks_per_node < 1)
    throw UsageError("walk length and count must be positive");
  if (graph.node_count() == 0) throw UsageError("cannot walk an empty graph");
  if (!graph.finalized()) throw DataError("graph not finalized");

  const double inv_p = 1.0 / params.p;
  const double inv_q = 1.0 / params.q;
  const std::size_t n_walks =
      static_cast<std::size_t>(graph.node_count()) *
      static_cast<std::size_t>(params.walks_per_node);
  std::vector<std::vector<int>> walks(n_walks);

  util::parallel_for(n_walks, params.threads, [&](std::size_t wi) {
    int start = static_cast<int>(wi / static_cast<std::size_t>(params.walks_per_node));
    util::Rng rng(util::derive_seed(params.seed, "kg.walk", wi));
    auto& walk = walks[wi];
    walk.reserve(static_cast<std::size_t>(params.walk_length));
    walk.push_back(start);
    int prev = -1;
    int cur = start;
    while (static_cast<int>(walk.size()) < params.walk_length) {
      int nxt = step(graph, cur, prev, inv_p, inv_q, rng);
      if (nxt < 0) break;  // isolated start node
      walk.push_back(nxt);
      prev = cur;
      cur = nxt;
    }
  });
  return walks;
}

}  // namespace engpred::kg
