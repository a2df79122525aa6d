#include "engpred/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <utility>

#include <nlohmann/json.hpp>

#include "engpred/errors.hpp"
#include "engpred/sentiment.hpp"
#include "engpred/transfeat.hpp"
#include "engpred/util.hpp"

namespace fs = std::filesystem;

namespace engpred::pipeline {

namespace {

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string lower_name(EngagementType t) {
  switch (t) {
    case EngagementType::Reply: return "reply";
    case EngagementType::Retweet: return "retweet";
    case EngagementType::Quote: return "quote";
    default: return "like";
  }
}

std::uint64_t records_fingerprint(const std::vector<EngagementRecord>& records) {
  std::uint64_t h = util::fnv1a64("records|v1");
  for (const auto& r : records) {
    std::string line = synthgen::serialize_record(r);
    h = util::fnv1a64(line.data(), line.size(), h);
    h = util::fnv1a64("\n", 1, h);
  }
  return h;
}

std::vector<EngagementRecord> parse_input(const std::string& path, const char* what) {
  if (path.empty() || !fs::exists(path))
    throw DataError(std::string(what) + " missing: " + (path.empty() ? "(unset)" : path));
  return ingest::parse_tsv(path);
}

// First k slots of a seeded shuffle, restored to input order.
std::vector<EngagementRecord> take_sample(std::vector<EngagementRecord> records,
                                          std::size_t k, std::uint64_t seed) {
  if (k >= records.size()) return records;
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  util::Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<EngagementRecord> out;
  out.reserve(k);
  for (std::size_t i : idx) out.push_back(std::move(records[i]));
  return out;
}

std::vector<EngagementRecord> gather(const std::vector<EngagementRecord>& records,
                                     const std::vector<std::size_t>& indices) {
  std::vector<EngagementRecord> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(records[i]);
  return out;
}

double positive_rate(const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  std::size_t pos = 0;
  for (int v : labels) pos += static_cast<std::size_t>(v);
  return static_cast<double>(pos) / static_cast<double>(labels.size());
}

sentiment::Provider make_sentiment_provider(const PipelineConfig& cfg) {
  if (!cfg.sentiment_file.empty()) {
    if (!fs::exists(cfg.sentiment_file))
      throw DataError("sentiment file missing: " + cfg.sentiment_file);
    return sentiment::precomputed_provider(
        sentiment::load_precomputed(cfg.sentiment_file));
  }
  auto lexicon = sentiment::hash_lexicon(
      cfg.lexicon_vocab_size, util::derive_seed(cfg.seed, "pipeline.lexicon"));
  return sentiment::lexicon_provider(std::move(lexicon), cfg.english_language_ids);
}

std::uint64_t sentiment_key(const PipelineConfig& cfg) {
  std::string desc = "sentiment|v1|";
  if (!cfg.sentiment_file.empty()) {
    desc += "file|" + hex64(util::hash_file(cfg.sentiment_file));
  } else {
    desc += "lexicon|" + std::to_string(cfg.lexicon_vocab_size) + "|" +
            hex64(util::derive_seed(cfg.seed, "pipeline.lexicon"));
  }
  for (const auto& lang : cfg.english_language_ids) desc += "|" + lang;
  return util::fnv1a64(desc);
}

FeatureBlock cached_block(const PipelineConfig& cfg, const std::string& group,
                          std::uint64_t key,
                          std::map<std::string, std::string>* artifacts,
                          const std::function<FeatureBlock()>& make) {
  std::string dir = join(cfg.workdir, "blocks");
  fs::create_directories(dir);
  std::string path = join(dir, group + "." + hex64(key) + ".bin");
  if (artifacts) (*artifacts)["block_" + group] = path;
  if (fs::exists(path)) return FeatureBlock::load(path);
  FeatureBlock block = make();
  block.save(path);
  return block;
}

struct ContentArtifacts {
  content::TfidfVocabulary vocab;
  std::array<content::LinearModel, kNumEngagementTypes> models;
  std::uint64_t key = 0;
};

content::LinearParams derived_linear(const PipelineConfig& cfg) {
  content::LinearParams lp = cfg.linear;
  lp.seed = util::derive_seed(cfg.seed, "pipeline.linear");
  return lp;
}

// Vocabulary and linear models fit on the train rows, persisted under stable
// paths with a key stamp so later runs and `predict` reuse them as-is.
ContentArtifacts ensure_content_artifacts(
    const SampledData& data, const PipelineConfig& cfg,
    std::map<std::string, std::string>* artifacts) {
  auto train_records = gather(data.records, data.split.train);
  content::LinearParams lp = derived_linear(cfg);
  std::string desc = "content|v1|" + hex64(records_fingerprint(train_records)) +
                     "|" + std::to_string(cfg.vocab_max_features) + "|" +
                     std::to_string(cfg.vocab_min_df) + "|" +
                     std::string(content::to_string(lp.loss)) + "|" +
                     std::to_string(lp.l2) + "|" + std::to_string(lp.epochs) +
                     "|" + std::to_string(lp.calibration_fraction) + "|" +
                     std::to_string(lp.seed);
  ContentArtifacts out;
  out.key = util::fnv1a64(desc);

  std::string vpath = vocab_path(cfg);
  std::string mpath = content_models_path(cfg);
  std::string meta_path = join(cfg.workdir, "content_meta.json");
  if (artifacts) {
    (*artifacts)["vocab"] = vpath;
    (*artifacts)["content_models"] = mpath;
  }

  if (fs::exists(meta_path) && fs::exists(vpath) && fs::exists(mpath)) {
    auto meta = nlohmann::json::parse(util::read_file(meta_path));
    if (meta.value("key", std::string{}) == hex64(out.key)) {
      out.vocab = content::TfidfVocabulary::load(vpath);
      out.models = content::models_from_json(util::read_file(mpath));
      return out;
    }
  }

  fs::create_directories(cfg.workdir);
  std::vector<std::vector<std::uint32_t>> corpus;
  corpus.reserve(train_records.size());
  for (const auto& r : train_records) corpus.push_back(r.text_tokens);
  out.vocab = content::TfidfVocabulary::fit(corpus, cfg.vocab_max_features,
                                            cfg.vocab_min_df);
  out.models = content::train_content_models(out.vocab, train_records, lp);
  out.vocab.save(vpath);
  util::write_file(mpath, content::models_to_json(out.models));
  nlohmann::json meta{{"key", hex64(out.key)}};
  util::write_file(meta_path, meta.dump(2) + "\n");
  return out;
}

gbdt::Hyperparams derived_gbdt(const PipelineConfig& cfg, EngagementType t) {
  gbdt::Hyperparams hp = cfg.gbdt;
  hp.seed = util::derive_seed(cfg.seed, "pipeline.gbdt",
                              static_cast<std::uint64_t>(t));
  hp.threads = cfg.threads;
  return hp;
}

FeatureBlock slice_block(const FeatureBlock& block, std::size_t begin,
                         std::size_t end) {
  FeatureBlock out;
  for (std::size_t c = 0; c < block.n_cols(); ++c) {
    out.add_column(block.names[c],
                   std::vector<double>(block.cols[c].begin() + begin,
                                       block.cols[c].begin() + end));
  }
  return out;
}

// Trains the preset's models on the sample's train rows, scores the dev rows,
// and writes every artifact under run_name.
RunResult run_train_eval(const SampledData& data, int preset,
                         const PipelineConfig& cfg, const std::string& run_name) {
  unsigned mask = preset_groups(preset);
  RunResult result;
  auto blocks = compute_blocks(data, mask, cfg, &result.artifacts);
  std::array<const FeatureBlock*, 4> ptrs{};
  for (unsigned g = 0; g < 4; ++g)
    if (blocks[g]) ptrs[g] = &*blocks[g];

  auto matrix = ensemble::assemble(data.records, ptrs);
  auto train_m = matrix.select_rows(data.split.train);
  auto dev_m = matrix.select_rows(data.split.dev);

  fs::create_directories(models_dir(cfg));
  fs::create_directories(reports_dir(cfg));

  std::array<std::vector<double>, kNumEngagementTypes> scores;
  std::array<std::vector<int>, kNumEngagementTypes> labels;
  std::array<double, kNumEngagementTypes> baselines{};
  for (EngagementType t : kAllEngagementTypes) {
    auto i = static_cast<std::size_t>(t);
    auto hp = derived_gbdt(cfg, t);
    auto model = gbdt::train(train_m, t, hp, &dev_m);

    std::string mpath =
        join(models_dir(cfg), run_name + "_" + lower_name(t) + ".json");
    model.save(mpath);
    result.artifacts["model_" + lower_name(t)] = mpath;

    std::string cpath =
        join(reports_dir(cfg), run_name + "_curve_" + lower_name(t) + ".csv");
    gbdt::write_curve_csv(cpath, "round,train_logloss", model.train_logloss);
    result.artifacts["curve_" + lower_name(t)] = cpath;

    scores[i] = gbdt::predict(model, dev_m);
    labels[i] = dev_m.labels_for(t);
    baselines[i] = positive_rate(train_m.labels_for(t));

    std::string ppath =
        join(reports_dir(cfg), run_name + "_pr_" + lower_name(t) + ".csv");
    eval::write_pr_csv(ppath, eval::pr_curve(scores[i], labels[i]));
    result.artifacts["pr_" + lower_name(t)] = ppath;
  }

  result.report = eval::compute_report(run_name, scores, labels, baselines);
  std::string jpath = join(reports_dir(cfg), run_name + ".json");
  std::string tpath = join(reports_dir(cfg), run_name + ".txt");
  util::write_file(jpath, eval::reports_json({result.report}));
  util::write_file(tpath, eval::render_table({result.report}));
  result.artifacts["report_json"] = jpath;
  result.artifacts["report_txt"] = tpath;
  return result;
}

RunResult run_stage3(const PipelineConfig& cfg) {
  auto records = parse_input(cfg.input, "input file");
  if (records.empty()) throw DataError("input file has no records: " + cfg.input);
  auto holdout = parse_input(cfg.holdout, "holdout file");
  if (holdout.empty())
    throw DataError("holdout file has no records: " + cfg.holdout);

  SampledData data;
  data.records = std::move(records);
  data.split.train.resize(data.records.size());
  std::iota(data.split.train.begin(), data.split.train.end(), std::size_t{0});

  unsigned mask = preset_groups(cfg.preset);
  RunResult result;

  // Counters for the holdout see the training history: one augmented block
  // over train followed by holdout rows, sliced apart.
  std::vector<EngagementRecord> unioned = data.records;
  unioned.insert(unioned.end(), holdout.begin(), holdout.end());
  FeatureBlock d1_union = transfeat::augment(unioned);
  FeatureBlock d1_train = slice_block(d1_union, 0, data.records.size());
  FeatureBlock d1_hold =
      slice_block(d1_union, data.records.size(), unioned.size());

  std::array<std::optional<FeatureBlock>, 4> train_blocks;
  std::array<std::optional<FeatureBlock>, 4> hold_blocks;
  train_blocks[0] = std::move(d1_train);
  hold_blocks[0] = std::move(d1_hold);

  if (mask & 0b0010) {
    std::string epath = embeddings_path(cfg);
    if (!fs::exists(epath))
      throw DataError("embeddings artifact missing: " + epath +
                      " (run kg-embed first)");
    auto table = embedding::EmbeddingTable::import_text(epath);
    train_blocks[1] = embedding::embed_block(table, data.records);
    hold_blocks[1] = embedding::embed_block(table, holdout);
    result.artifacts["embeddings"] = epath;
  }
  if (mask & 0b0100) {
    auto provider = make_sentiment_provider(cfg);
    train_blocks[2] = sentiment::sentiment_block(data.records, provider);
    hold_blocks[2] = sentiment::sentiment_block(holdout, provider);
  }
  if (mask & 0b1000) {
    auto fitted = ensure_content_artifacts(data, cfg, &result.artifacts);
    train_blocks[3] =
        content::content_block(fitted.vocab, fitted.models, data.records);
    hold_blocks[3] =
        content::content_block(fitted.vocab, fitted.models, holdout);
  }

  std::array<const FeatureBlock*, 4> tptrs{}, hptrs{};
  for (unsigned g = 0; g < 4; ++g) {
    if (train_blocks[g]) tptrs[g] = &*train_blocks[g];
    if (hold_blocks[g]) hptrs[g] = &*hold_blocks[g];
  }
  auto train_m = ensemble::assemble(data.records, tptrs);
  auto hold_m = ensemble::assemble(holdout, hptrs);

  fs::create_directories(models_dir(cfg));
  fs::create_directories(reports_dir(cfg));

  std::array<std::vector<double>, kNumEngagementTypes> train_scores, hold_scores;
  std::array<std::vector<int>, kNumEngagementTypes> labels;
  std::array<double, kNumEngagementTypes> baselines{};
  for (EngagementType t : kAllEngagementTypes) {
    auto i = static_cast<std::size_t>(t);
    auto model = gbdt::train(train_m, t, derived_gbdt(cfg, t));
    std::string mpath =
        join(models_dir(cfg), "stage3_" + lower_name(t) + ".json");
    model.save(mpath);
    result.artifacts["model_" + lower_name(t)] = mpath;
    train_scores[i] = gbdt::predict(model, train_m);
    hold_scores[i] = gbdt::predict(model, hold_m);
    labels[i] = train_m.labels_for(t);
    baselines[i] = positive_rate(labels[i]);
  }

  std::string ppath = join(cfg.workdir, "predictions.tsv");
  write_predictions(ppath, holdout, hold_scores);
  result.artifacts["predictions"] = ppath;

  result.report = eval::compute_report("stage3-train", train_scores, labels, baselines);
  std::string jpath = join(reports_dir(cfg), "stage3.json");
  util::write_file(jpath, eval::reports_json({result.report}));
  result.artifacts["report_json"] = jpath;
  return result;
}

}  // namespace

void PipelineConfig::validate() const {
  if (workdir.empty()) throw UsageError("workdir must not be empty");
  if (stage1_sample_size < 1) throw UsageError("stage1_sample_size must be positive");
  if (!(stage2_fraction > 0) || stage2_fraction > 1)
    throw UsageError("stage2_fraction must lie in (0, 1]");
  if (!(split_ratio > 0) || !(split_ratio < 1))
    throw UsageError("split_ratio must lie in (0, 1)");
  if (preset < 1 || preset > 4) throw UsageError("preset must be 1, 2, 3, or 4");
  if (threads < 1) throw UsageError("threads must be at least 1");
  if (lexicon_vocab_size < 1) throw UsageError("lexicon_vocab_size must be positive");
  if (vocab_max_features < 1) throw UsageError("vocab_max_features must be positive");
  if (vocab_min_df < 1) throw UsageError("vocab_min_df must be at least 1");
  gbdt.validate();
}

std::string PipelineConfig::to_json() const {
  nlohmann::json j{
      {"input", input},
      {"workdir", workdir},
      {"holdout", holdout},
      {"stage1_sample_size", stage1_sample_size},
      {"stage2_fraction", stage2_fraction},
      {"split_ratio", split_ratio},
      {"seed", seed},
      {"threads", threads},
      {"preset", preset},
      {"edges", nlohmann::json::parse(edges.to_json())},
      {"walk",
       {{"p", walk.p},
        {"q", walk.q},
        {"walk_length", walk.walk_length},
        {"walks_per_node", walk.walks_per_node}}},
      {"sgns",
       {{"dimension", sgns.dimension},
        {"window", sgns.window},
        {"negatives", sgns.negatives},
        {"epochs", sgns.epochs},
        {"learning_rate", sgns.learning_rate}}},
      {"vocab", {{"max_features", vocab_max_features}, {"min_df", vocab_min_df}}},
      {"linear",
       {{"loss", content::to_string(linear.loss)},
        {"l2", linear.l2},
        {"epochs", linear.epochs},
        {"calibration_fraction", linear.calibration_fraction}}},
      {"gbdt", nlohmann::json::parse(gbdt::hyperparams_to_json(gbdt))},
      {"sentiment",
       {{"lexicon_vocab_size", lexicon_vocab_size},
        {"file", sentiment_file},
        {"english_languages", english_language_ids}}}};
  return j.dump(2) + "\n";
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
  PipelineConfig cfg;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    static const std::set<std::string> known{
        "input",      "workdir", "holdout", "stage1_sample_size",
        "stage2_fraction", "split_ratio", "seed", "threads", "preset",
        "edges",      "walk",    "sgns",    "vocab",
        "linear",     "gbdt",    "sentiment"};
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) throw UsageError("unknown config key: " + key);
    }
    if (j.contains("input")) cfg.input = j["input"].get<std::string>();
    if (j.contains("workdir")) cfg.workdir = j["workdir"].get<std::string>();
    if (j.contains("holdout")) cfg.holdout = j["holdout"].get<std::string>();
    if (j.contains("stage1_sample_size"))
      cfg.stage1_sample_size = j["stage1_sample_size"].get<std::size_t>();
    if (j.contains("stage2_fraction"))
      cfg.stage2_fraction = j["stage2_fraction"].get<double>();
    if (j.contains("split_ratio")) cfg.split_ratio = j["split_ratio"].get<double>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    if (j.contains("preset")) cfg.preset = j["preset"].get<int>();
    if (j.contains("edges")) cfg.edges = kg::EdgeConfig::from_json(j["edges"].dump());
    if (j.contains("walk")) {
      const auto& w = j["walk"];
      if (w.contains("p")) cfg.walk.p = w["p"].get<double>();
      if (w.contains("q")) cfg.walk.q = w["q"].get<double>();
      if (w.contains("walk_length")) cfg.walk.walk_length = w["walk_length"].get<int>();
      if (w.contains("walks_per_node"))
        cfg.walk.walks_per_node = w["walks_per_node"].get<int>();
    }
    if (j.contains("sgns")) {
      const auto& s = j["sgns"];
      if (s.contains("dimension")) cfg.sgns.dimension = s["dimension"].get<int>();
      if (s.contains("window")) cfg.sgns.window = s["window"].get<int>();
      if (s.contains("negatives")) cfg.sgns.negatives = s["negatives"].get<int>();
      if (s.contains("epochs")) cfg.sgns.epochs = s["epochs"].get<int>();
      if (s.contains("learning_rate"))
        cfg.sgns.learning_rate = s["learning_rate"].get<double>();
    }
    if (j.contains("vocab")) {
      const auto& v = j["vocab"];
      if (v.contains("max_features"))
        cfg.vocab_max_features = v["max_features"].get<std::size_t>();
      if (v.contains("min_df")) cfg.vocab_min_df = v["min_df"].get<std::size_t>();
    }
    if (j.contains("linear")) {
      const auto& l = j["linear"];
      if (l.contains("loss"))
        cfg.linear.loss = content::loss_from_string(l["loss"].get<std::string>());
      if (l.contains("l2")) cfg.linear.l2 = l["l2"].get<double>();
      if (l.contains("epochs")) cfg.linear.epochs = l["epochs"].get<int>();
      if (l.contains("calibration_fraction"))
        cfg.linear.calibration_fraction = l["calibration_fraction"].get<double>();
    }
    if (j.contains("gbdt"))
      cfg.gbdt = gbdt::hyperparams_from_json(j["gbdt"].dump());
    if (j.contains("sentiment")) {
      const auto& s = j["sentiment"];
      if (s.contains("lexicon_vocab_size"))
        cfg.lexicon_vocab_size = s["lexicon_vocab_size"].get<std::uint64_t>();
      if (s.contains("file")) cfg.sentiment_file = s["file"].get<std::string>();
      if (s.contains("english_languages"))
        cfg.english_language_ids =
            s["english_languages"].get<std::set<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad pipeline config JSON: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("config file missing: " + path);
  return from_json(util::read_file(path));
}

std::string graph_path(const PipelineConfig& cfg) {
  return join(cfg.workdir, "graph.tsv");
}
std::string embeddings_path(const PipelineConfig& cfg) {
  return join(cfg.workdir, "embeddings.txt");
}
std::string vocab_path(const PipelineConfig& cfg) {
  return join(cfg.workdir, "tfidf_vocab.bin");
}
std::string content_models_path(const PipelineConfig& cfg) {
  return join(cfg.workdir, "content_models.json");
}
std::string models_dir(const PipelineConfig& cfg) {
  return join(cfg.workdir, "models");
}
std::string reports_dir(const PipelineConfig& cfg) {
  return join(cfg.workdir, "reports");
}
std::string model_path(const PipelineConfig& cfg, int preset, EngagementType t) {
  return join(models_dir(cfg),
              "model" + std::to_string(preset) + "_" + lower_name(t) + ".json");
}

SampledData load_stage1(const PipelineConfig& cfg) {
  SampledData data;
  data.records = take_sample(parse_input(cfg.input, "input file"),
                             cfg.stage1_sample_size,
                             util::derive_seed(cfg.seed, "pipeline.sample"));
  if (data.records.empty())
    throw DataError("input file has no records: " + cfg.input);
  data.split = ingest::split_indices(data.records, cfg.split_ratio,
                                     ingest::SplitMode::Random,
                                     util::derive_seed(cfg.seed, "pipeline.split"));
  return data;
}

SampledData load_stage2(const PipelineConfig& cfg) {
  auto records = parse_input(cfg.input, "input file");
  if (records.empty()) throw DataError("input file has no records: " + cfg.input);
  auto k = static_cast<std::size_t>(
      std::ceil(cfg.stage2_fraction * static_cast<double>(records.size())));
  SampledData data;
  data.records = take_sample(std::move(records), k,
                             util::derive_seed(cfg.seed, "pipeline.sample"));
  data.split = ingest::split_indices(data.records, cfg.split_ratio,
                                     ingest::SplitMode::Random,
                                     util::derive_seed(cfg.seed, "pipeline.split"));
  return data;
}

unsigned preset_groups(int preset) {
  switch (preset) {
    case 1: return 0b0001;
    case 2: return 0b0011;
    case 3: return 0b0101;
    case 4: return 0b1001;
    default: throw UsageError("preset must be 1, 2, 3, or 4");
  }
}

std::array<std::optional<FeatureBlock>, 4> compute_blocks(
    const SampledData& data, unsigned groups_mask, const PipelineConfig& cfg,
    std::map<std::string, std::string>* artifacts) {
  std::array<std::optional<FeatureBlock>, 4> out;
  const std::uint64_t fp = records_fingerprint(data.records);

  if (groups_mask & 0b0001) {
    auto key = util::fnv1a64("d1|v1|" + hex64(fp));
    out[0] = cached_block(cfg, "d1", key, artifacts,
                          [&] { return transfeat::augment(data.records); });
  }
  if (groups_mask & 0b0010) {
    std::string epath = embeddings_path(cfg);
    if (!fs::exists(epath))
      throw DataError("embeddings artifact missing: " + epath +
                      " (run kg-embed first)");
    if (artifacts) (*artifacts)["embeddings"] = epath;
    auto key = util::fnv1a64("d2|v1|" + hex64(fp) + "|" +
                             hex64(util::hash_file(epath)));
    out[1] = cached_block(cfg, "d2", key, artifacts, [&] {
      auto table = embedding::EmbeddingTable::import_text(epath);
      return embedding::embed_block(table, data.records);
    });
  }
  if (groups_mask & 0b0100) {
    auto key = util::fnv1a64("d3|v1|" + hex64(fp) + "|" +
                             hex64(sentiment_key(cfg)));
    out[2] = cached_block(cfg, "d3", key, artifacts, [&] {
      return sentiment::sentiment_block(data.records, make_sentiment_provider(cfg));
    });
  }
  if (groups_mask & 0b1000) {
    auto fitted = ensure_content_artifacts(data, cfg, artifacts);
    auto key = util::fnv1a64("d4|v1|" + hex64(fp) + "|" + hex64(fitted.key));
    out[3] = cached_block(cfg, "d4", key, artifacts, [&] {
      return content::content_block(fitted.vocab, fitted.models, data.records);
    });
  }
  return out;
}

std::string build_graph_artifact(const PipelineConfig& cfg) {
  cfg.validate();
  auto data = load_stage1(cfg);
  auto train_records = gather(data.records, data.split.train);
  auto graph = kg::build_graph(train_records, cfg.edges);
  fs::create_directories(cfg.workdir);
  std::string path = graph_path(cfg);
  graph.export_tsv(path);
  return path;
}

std::string build_embeddings_artifact(const PipelineConfig& cfg) {
  cfg.validate();
  std::string gpath = graph_path(cfg);
  if (!fs::exists(gpath))
    throw DataError("graph artifact missing: " + gpath + " (run kg-build first)");
  auto graph = kg::TypedGraph::import_tsv(gpath);

  kg::WalkParams wp = cfg.walk;
  wp.seed = util::derive_seed(cfg.seed, "pipeline.walk");
  wp.threads = cfg.threads;
  auto walks = kg::generate_walks(graph, wp);

  embedding::SgnsParams sp = cfg.sgns;
  sp.seed = util::derive_seed(cfg.seed, "pipeline.sgns");
  sp.threads = 1;  // parallel SGNS traded away: artifacts must be bit-stable
  auto table = embedding::train_embeddings(graph, walks, sp);

  std::string path = embeddings_path(cfg);
  table.export_text(path);
  return path;
}

std::string build_content_artifacts(const PipelineConfig& cfg) {
  cfg.validate();
  auto data = load_stage1(cfg);
  ensure_content_artifacts(data, cfg, nullptr);
  return content_models_path(cfg);
}

RunResult run_model(int preset, const PipelineConfig& cfg) {
  cfg.validate();
  preset_groups(preset);
  auto data = load_stage1(cfg);
  return run_train_eval(data, preset, cfg, "model" + std::to_string(preset));
}

RunResult run_stage(int stage, const PipelineConfig& cfg) {
  cfg.validate();
  switch (stage) {
    case 1: return run_train_eval(load_stage1(cfg), cfg.preset, cfg, "stage1");
    case 2: return run_train_eval(load_stage2(cfg), cfg.preset, cfg, "stage2");
    case 3: return run_stage3(cfg);
    default: throw UsageError("stage must be 1, 2, or 3");
  }
}

std::array<std::optional<FeatureBlock>, 4> score_blocks(
    const std::vector<EngagementRecord>& records, unsigned groups_mask,
    const PipelineConfig& cfg) {
  std::array<std::optional<FeatureBlock>, 4> out;
  if (groups_mask & 0b0001) out[0] = transfeat::augment(records);
  if (groups_mask & 0b0010) {
    std::string epath = embeddings_path(cfg);
    if (!fs::exists(epath))
      throw DataError("embeddings artifact missing: " + epath +
                      " (run kg-embed first)");
    auto table = embedding::EmbeddingTable::import_text(epath);
    out[1] = embedding::embed_block(table, records);
  }
  if (groups_mask & 0b0100)
    out[2] = sentiment::sentiment_block(records, make_sentiment_provider(cfg));
  if (groups_mask & 0b1000) {
    std::string vpath = vocab_path(cfg);
    std::string mpath = content_models_path(cfg);
    if (!fs::exists(vpath) || !fs::exists(mpath))
      throw DataError("content artifacts missing: " + mpath +
                      " (run tfidf first)");
    auto vocab = content::TfidfVocabulary::load(vpath);
    auto models = content::models_from_json(util::read_file(mpath));
    out[3] = content::content_block(vocab, models, records);
  }
  return out;
}

std::string run_predict(int preset, const PipelineConfig& cfg,
                        const std::string& input_path,
                        const std::string& output_path) {
  cfg.validate();
  unsigned mask = preset_groups(preset);
  auto records = parse_input(input_path, "input file");
  if (records.empty())
    throw DataError("input file has no records: " + input_path);

  auto blocks = score_blocks(records, mask, cfg);
  std::array<const FeatureBlock*, 4> ptrs{};
  for (unsigned g = 0; g < 4; ++g)
    if (blocks[g]) ptrs[g] = &*blocks[g];
  auto matrix = ensemble::assemble(records, ptrs);

  std::array<std::vector<double>, kNumEngagementTypes> scores;
  for (EngagementType t : kAllEngagementTypes) {
    std::string mpath = model_path(cfg, preset, t);
    if (!fs::exists(mpath))
      throw DataError("model artifact missing: " + mpath +
                      " (run train first)");
    auto model = gbdt::Model::load(mpath);
    scores[static_cast<std::size_t>(t)] = gbdt::predict(model, matrix);
  }
  write_predictions(output_path, records, scores);
  return output_path;
}

eval::MetricReport evaluate_predictions(const std::string& input_path,
                                        const std::string& predictions_path) {
  auto records = parse_input(input_path, "input file");
  if (!fs::exists(predictions_path))
    throw DataError("predictions file missing: " + predictions_path);
  auto lines = util::split_on(util::read_file(predictions_path), '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() != records.size())
    throw DataError("predictions file has " + std::to_string(lines.size()) +
                    " rows, input has " + std::to_string(records.size()));

  std::array<std::vector<double>, kNumEngagementTypes> scores;
  for (auto& s : scores) s.resize(records.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto fields = util::split_on(lines[i], '\t');
    if (fields.size() != 6)
      throw DataError("predictions line " + std::to_string(i + 1) +
                      ": expected 6 fields, got " +
                      std::to_string(fields.size()));
    if (fields[0] != records[i].tweet_id)
      throw DataError("predictions line " + std::to_string(i + 1) +
                      ": tweet_id " + fields[0] + " does not match input " +
                      records[i].tweet_id);
    for (std::size_t f = 2; f < 6; ++f) {
      try {
        scores[f - 2][i] = std::stod(fields[f]);
      } catch (const std::exception&) {
        throw DataError("predictions line " + std::to_string(i + 1) +
                        ": bad probability: " + fields[f]);
      }
    }
  }

  std::array<std::vector<int>, kNumEngagementTypes> labels;
  std::array<double, kNumEngagementTypes> baselines{};
  for (EngagementType t : kAllEngagementTypes) {
    auto i = static_cast<std::size_t>(t);
    labels[i].reserve(records.size());
    for (const auto& r : records)
      labels[i].push_back(r.has_engagement(t) ? 1 : 0);
    baselines[i] = positive_rate(labels[i]);
  }
  return eval::compute_report("evaluate", scores, labels, baselines);
}

void write_predictions(
    const std::string& path, const std::vector<EngagementRecord>& records,
    const std::array<std::vector<double>, kNumEngagementTypes>& scores) {
  for (const auto& s : scores) {
    if (s.size() != records.size())
      throw DataError("prediction vector does not align with the records");
  }
  std::string out;
  out.reserve(records.size() * 96);
  char buf[32];
  const auto order = {EngagementType::Reply, EngagementType::Retweet,
                      EngagementType::Quote, EngagementType::Like};
  for (std::size_t i = 0; i < records.size(); ++i) {
    out += records[i].tweet_id;
    out += '\t';
    out += records[i].reader.user_id;
    for (EngagementType t : order) {
      std::snprintf(buf, sizeof(buf), "%.17g",
                    scores[static_cast<std::size_t>(t)][i]);
      out += '\t';
      out += buf;
    }
    out += '\n';
  }
  util::write_file(path, out);
}

}  // namespace engpred::pipeline
