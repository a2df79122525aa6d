#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "engpred/content.hpp"
#include "engpred/embedding.hpp"
#include "engpred/ensemble.hpp"
#include "engpred/eval.hpp"
#include "engpred/feature_block.hpp"
#include "engpred/gbdt.hpp"
#include "engpred/ingest.hpp"
#include "engpred/kg.hpp"
#include "engpred/synthgen.hpp"
#include "engpred/types.hpp"

namespace engpred::pipeline {

// Orchestration config. Every random choice anywhere in a run derives from
// `seed` through fixed tags (pipeline.sample, pipeline.split, pipeline.walk,
// pipeline.sgns, pipeline.lexicon, pipeline.linear, pipeline.gbdt + ordinal),
// so seed fields inside the nested param structs are ignored and overwritten.
struct PipelineConfig {
  std::string input;    // canonical engagement-log TSV
  std::string workdir = "work";
  std::string holdout;  // unlabeled TSV scored by stage 3

  std::size_t stage1_sample_size = 200000;
  double stage2_fraction = 0.4;
  double split_ratio = 0.9;  // train share of each stage's sample
  std::uint64_t seed = 1;
  int threads = 1;
  int preset = 1;  // model preset: 1 = D1, 2 = D1+D2, 3 = D1+D3, 4 = D1+D4

  kg::EdgeConfig edges;
  kg::WalkParams walk;
  embedding::SgnsParams sgns;
  std::size_t vocab_max_features = content::kDefaultMaxFeatures;
  std::size_t vocab_min_df = content::kDefaultMinDf;
  content::LinearParams linear;
  gbdt::Hyperparams gbdt;

  std::uint64_t lexicon_vocab_size = 5000;
  std::string sentiment_file;  // precomputed scores TSV; empty = hash lexicon
  std::set<std::string> english_language_ids = {
      synthgen::GenConfig::english_language_id()};

  void validate() const;
  std::string to_json() const;
  static PipelineConfig from_json(const std::string& text);
  static PipelineConfig load(const std::string& path);
};

// Fixed artifact locations under the work dir.
std::string graph_path(const PipelineConfig& cfg);
std::string embeddings_path(const PipelineConfig& cfg);
std::string vocab_path(const PipelineConfig& cfg);
std::string content_models_path(const PipelineConfig& cfg);
std::string models_dir(const PipelineConfig& cfg);
std::string reports_dir(const PipelineConfig& cfg);
std::string model_path(const PipelineConfig& cfg, int preset, EngagementType t);

// The subsample plus its train/dev split. Sampling takes the first k slots of
// a seeded shuffle and restores input order; the split is Bernoulli per row.
struct SampledData {
  std::vector<EngagementRecord> records;
  ingest::SplitIndices split;
};

SampledData load_stage1(const PipelineConfig& cfg);  // at most stage1_sample_size rows
SampledData load_stage2(const PipelineConfig& cfg);  // ceil(stage2_fraction * n) rows

unsigned preset_groups(int preset);  // group bitmask of a model preset

// Computes the masked feature groups for the sampled records, reusing the
// on-disk block cache (keyed by record content + relevant config) when it
// already holds the answer. Group models that learn from data (D2 embeddings,
// D4 vocabulary and linear models) fit on the train rows only. D2 always
// loads the embeddings artifact and fails if kg-embed has not produced it.
// Artifact paths are recorded under stable names when `artifacts` is given.
std::array<std::optional<FeatureBlock>, 4> compute_blocks(
    const SampledData& data, unsigned groups_mask, const PipelineConfig& cfg,
    std::map<std::string, std::string>* artifacts);

// kg-build: heterogeneous graph from the stage-1 train rows -> graph.tsv.
std::string build_graph_artifact(const PipelineConfig& cfg);
// kg-embed: walks + skip-gram training over graph.tsv -> embeddings.txt.
std::string build_embeddings_artifact(const PipelineConfig& cfg);
// tfidf: vocabulary + calibrated linear models from the stage-1 train rows.
std::string build_content_artifacts(const PipelineConfig& cfg);

struct RunResult {
  eval::MetricReport report;
  std::map<std::string, std::string> artifacts;  // stable name -> path
};

// Trains one gradient-boosted model per engagement type on the preset's
// feature groups, evaluates the dev split, and writes models, training
// curves, precision-recall points, and the metric report.
RunResult run_model(int preset, const PipelineConfig& cfg);

// Stage 1: stage1_sample_size rows. Stage 2: stage2_fraction of the input.
// Both train and evaluate the configured preset on a 90/10-style split.
// Stage 3: trains on the full input and scores the unlabeled holdout file
// into predictions.tsv; its report carries training-split metrics.
RunResult run_stage(int stage, const PipelineConfig& cfg);

// Artifact-only featurization for scoring: D1 comes from the records alone,
// every other group loads previously built artifacts. Nothing is fitted.
std::array<std::optional<FeatureBlock>, 4> score_blocks(
    const std::vector<EngagementRecord>& records, unsigned groups_mask,
    const PipelineConfig& cfg);

// Scores an input file with the preset's trained models and writes the
// predictions TSV. Models and feature artifacts must already exist.
std::string run_predict(int preset, const PipelineConfig& cfg,
                        const std::string& input_path,
                        const std::string& output_path);

// Joins a labeled input file with a predictions file row by row and reports
// metrics. The baseline rate is the labeled file's own positive rate.
eval::MetricReport evaluate_predictions(const std::string& input_path,
                                        const std::string& predictions_path);

// Predictions TSV: tweet_id, reader_user_id, p_reply, p_retweet, p_quote,
// p_like. One row per record, probabilities rendered with %.17g.
void write_predictions(
    const std::string& path, const std::vector<EngagementRecord>& records,
    const std::array<std::vector<double>, kNumEngagementTypes>& scores);

}  // namespace engpred::pipeline
