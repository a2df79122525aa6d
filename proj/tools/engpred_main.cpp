#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "engpred/ensemble.hpp"
#include "engpred/errors.hpp"
#include "engpred/eval.hpp"
#include "engpred/ingest.hpp"
#include "engpred/pipeline.hpp"
#include "engpred/sentiment.hpp"
#include "engpred/synthgen.hpp"
#include "engpred/util.hpp"

namespace fs = std::filesystem;
using namespace engpred;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> workdir;
  std::optional<int> threads;
};

pipeline::PipelineConfig load_config(const GlobalOpts& g) {
  auto cfg = g.config_path.empty() ? pipeline::PipelineConfig{}
                                   : pipeline::PipelineConfig::load(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (g.workdir) cfg.workdir = *g.workdir;
  if (g.threads) cfg.threads = *g.threads;
  cfg.validate();
  return cfg;
}

EngagementType parse_engagement(const std::string& name) {
  if (name == "reply") return EngagementType::Reply;
  if (name == "retweet") return EngagementType::Retweet;
  if (name == "quote") return EngagementType::Quote;
  if (name == "like") return EngagementType::Like;
  throw UsageError("unknown engagement type: " + name +
                   " (expected reply, retweet, quote, or like)");
}

unsigned parse_groups(const std::string& spec) {
  unsigned mask = 0;
  for (const auto& part : util::split_on(spec, ',')) {
    if (part == "d1" || part == "D1") mask |= 0b0001;
    else if (part == "d2" || part == "D2") mask |= 0b0010;
    else if (part == "d3" || part == "D3") mask |= 0b0100;
    else if (part == "d4" || part == "D4") mask |= 0b1000;
    else throw UsageError("unknown feature group: " + part);
  }
  if (mask == 0) throw UsageError("no feature groups selected");
  return mask;
}

gbdt::Hyperparams booster_params(const pipeline::PipelineConfig& cfg,
                                 EngagementType t) {
  gbdt::Hyperparams hp = cfg.gbdt;
  hp.seed = util::derive_seed(cfg.seed, "pipeline.gbdt",
                              static_cast<std::uint64_t>(t));
  hp.threads = cfg.threads;
  return hp;
}

std::string require_input(const pipeline::PipelineConfig& cfg,
                          const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (!cfg.input.empty()) return cfg.input;
  throw UsageError("no input file: pass --in or set \"input\" in the config");
}

// name=v1,v2,... -> one grid axis
std::pair<std::string, std::vector<double>> parse_grid_axis(
    const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw UsageError("bad --param, expected name=v1,v2,...: " + spec);
  std::vector<double> values;
  for (const auto& v : util::split_on(spec.substr(eq + 1), ',')) {
    try {
      values.push_back(std::stod(v));
    } catch (const std::exception&) {
      throw UsageError("bad --param value: " + v);
    }
  }
  return {spec.substr(0, eq), values};
}

void print_artifacts(const std::map<std::string, std::string>& artifacts) {
  for (const auto& [name, path] : artifacts)
    std::printf("%s\t%s\n", name.c_str(), path.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage tweet engagement prediction pipeline"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "pipeline config JSON file");
  app.add_option("--seed", g.seed, "master seed (overrides config)");
  app.add_option("--workdir", g.workdir, "artifact directory (overrides config)");
  app.add_option("--threads", g.threads, "worker threads (overrides config)");

  auto* c_generate = app.add_subcommand("generate", "write a synthetic engagement log");
  std::string gen_out, gen_cfg_path;
  std::optional<int> gen_records;
  c_generate->add_option("--out", gen_out, "output TSV path")->required();
  c_generate->add_option("--gen-config", gen_cfg_path, "generator config JSON file");
  c_generate->add_option("--records", gen_records, "record count (overrides generator config)");
  c_generate->callback([&] {
    auto gc = gen_cfg_path.empty()
                  ? synthgen::GenConfig{}
                  : synthgen::GenConfig::from_json(util::read_file(gen_cfg_path));
    if (gen_records) gc.n_records = *gen_records;
    if (g.seed) gc.seed = *g.seed;
    gc.validate();
    auto generated = synthgen::generate(gc);
    synthgen::write_tsv(generated.records, gen_out);
    std::printf("wrote %zu records to %s\n", generated.records.size(),
                gen_out.c_str());
  });

  auto* c_stats = app.add_subcommand("stats", "summarize an engagement log");
  std::string stats_in, stats_json;
  c_stats->add_option("--in", stats_in, "input TSV (default: config input)");
  c_stats->add_option("--json", stats_json, "also write the summary as JSON");
  c_stats->callback([&] {
    auto cfg = load_config(g);
    auto records = ingest::parse_tsv(require_input(cfg, stats_in));
    auto report = ingest::dataset_stats(records);
    std::fputs(report.render().c_str(), stdout);
    if (!stats_json.empty()) util::write_file(stats_json, report.to_json());
  });

  auto* c_features = app.add_subcommand(
      "features", "compute feature blocks for the stage-1 sample");
  std::string feat_groups;
  c_features->add_option("--groups", feat_groups,
                         "comma list of d1,d2,d3,d4 (default: preset groups)");
  c_features->callback([&] {
    auto cfg = load_config(g);
    unsigned mask = feat_groups.empty() ? pipeline::preset_groups(cfg.preset)
                                        : parse_groups(feat_groups);
    auto data = pipeline::load_stage1(cfg);
    std::map<std::string, std::string> artifacts;
    pipeline::compute_blocks(data, mask, cfg, &artifacts);
    print_artifacts(artifacts);
  });

  auto* c_kg_build = app.add_subcommand(
      "kg-build", "build the interaction graph from the stage-1 train rows");
  c_kg_build->callback([&] {
    auto path = pipeline::build_graph_artifact(load_config(g));
    std::printf("%s\n", path.c_str());
  });

  auto* c_kg_embed = app.add_subcommand(
      "kg-embed", "train node embeddings over the built graph");
  c_kg_embed->callback([&] {
    auto path = pipeline::build_embeddings_artifact(load_config(g));
    std::printf("%s\n", path.c_str());
  });

  auto* c_sentiment = app.add_subcommand(
      "sentiment", "write the seeded sentiment lexicon");
  std::string senti_out;
  c_sentiment->add_option("--out", senti_out,
                          "lexicon TSV path (default: workdir/lexicon.tsv)");
  c_sentiment->callback([&] {
    auto cfg = load_config(g);
    auto lexicon = sentiment::hash_lexicon(
        cfg.lexicon_vocab_size, util::derive_seed(cfg.seed, "pipeline.lexicon"));
    auto path = senti_out.empty()
                    ? (fs::path(cfg.workdir) / "lexicon.tsv").string()
                    : senti_out;
    auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    sentiment::save_lexicon(path, lexicon);
    std::printf("%s\n", path.c_str());
  });

  auto* c_tfidf = app.add_subcommand(
      "tfidf", "fit the term vocabulary and content classifiers");
  c_tfidf->callback([&] {
    auto cfg = load_config(g);
    pipeline::build_content_artifacts(cfg);
    std::printf("%s\n%s\n", pipeline::vocab_path(cfg).c_str(),
                pipeline::content_models_path(cfg).c_str());
  });

  auto* c_train = app.add_subcommand(
      "train", "train and evaluate the configured model preset");
  c_train->callback([&] {
    auto cfg = load_config(g);
    auto result = pipeline::run_model(cfg.preset, cfg);
    std::fputs(eval::render_table({result.report}).c_str(), stdout);
  });

  auto* c_model = app.add_subcommand(
      "model", "train and evaluate one model preset (1=D1 2=+D2 3=+D3 4=+D4)");
  int model_preset = 0;
  c_model->add_option("preset", model_preset, "model preset")
      ->required()
      ->check(CLI::Range(1, 4));
  c_model->callback([&] {
    auto result = pipeline::run_model(model_preset, load_config(g));
    std::fputs(eval::render_table({result.report}).c_str(), stdout);
  });

  auto* c_stage = app.add_subcommand(
      "stage", "run one development stage (1=subsample 2=fraction 3=holdout)");
  int stage_no = 0;
  c_stage->add_option("stage", stage_no, "stage number")
      ->required()
      ->check(CLI::Range(1, 3));
  c_stage->callback([&] {
    auto result = pipeline::run_stage(stage_no, load_config(g));
    std::fputs(eval::render_table({result.report}).c_str(), stdout);
    if (result.artifacts.count("predictions"))
      std::printf("predictions\t%s\n",
                  result.artifacts.at("predictions").c_str());
  });

  auto* c_predict = app.add_subcommand(
      "predict", "score a file with previously trained preset models");
  std::string pred_in, pred_out;
  std::optional<int> pred_preset;
  c_predict->add_option("--in", pred_in, "input TSV (default: config input)");
  c_predict->add_option("--out", pred_out,
                        "predictions path (default: workdir/predictions.tsv)");
  c_predict->add_option("--preset", pred_preset, "model preset (default: config preset)")
      ->check(CLI::Range(1, 4));
  c_predict->callback([&] {
    auto cfg = load_config(g);
    auto out = pred_out.empty()
                   ? (fs::path(cfg.workdir) / "predictions.tsv").string()
                   : pred_out;
    auto parent = fs::path(out).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    auto path = pipeline::run_predict(pred_preset.value_or(cfg.preset), cfg,
                                      require_input(cfg, pred_in), out);
    std::printf("%s\n", path.c_str());
  });

  auto* c_evaluate = app.add_subcommand(
      "evaluate", "score a predictions file against labeled data");
  std::string eval_in, eval_pred, eval_json;
  c_evaluate->add_option("--in", eval_in, "labeled TSV (default: config input)");
  c_evaluate->add_option("--predictions", eval_pred,
                         "predictions TSV (default: workdir/predictions.tsv)");
  c_evaluate->add_option("--json", eval_json, "also write the report as JSON");
  c_evaluate->callback([&] {
    auto cfg = load_config(g);
    auto pred = eval_pred.empty()
                    ? (fs::path(cfg.workdir) / "predictions.tsv").string()
                    : eval_pred;
    auto report =
        pipeline::evaluate_predictions(require_input(cfg, eval_in), pred);
    std::fputs(eval::render_table({report}).c_str(), stdout);
    if (!eval_json.empty())
      util::write_file(eval_json, eval::reports_json({report}));
  });

  auto* c_ablate = app.add_subcommand(
      "ablate", "train every feature-group subset and rank by dev RCE");
  std::string abl_engagement = "like";
  c_ablate->add_option("--engagement", abl_engagement,
                       "engagement type (reply, retweet, quote, like)");
  c_ablate->callback([&] {
    auto cfg = load_config(g);
    auto type = parse_engagement(abl_engagement);
    auto data = pipeline::load_stage1(cfg);
    auto blocks =
        pipeline::compute_blocks(data, ensemble::kAllGroupsMask, cfg, nullptr);
    std::array<const FeatureBlock*, 4> ptrs{};
    for (unsigned i = 0; i < 4; ++i) ptrs[i] = &*blocks[i];
    auto result = ensemble::ablate(data.records, ptrs, type,
                                   booster_params(cfg, type), data.split);
    fs::create_directories(pipeline::reports_dir(cfg));
    auto jpath = (fs::path(pipeline::reports_dir(cfg)) /
                  ("ablation_" + abl_engagement + ".json"))
                     .string();
    util::write_file(jpath, ensemble::ablation_to_json(result));
    for (const auto& row : result.rows)
      std::printf("%-12s prauc %.6f  rce %.4f\n",
                  ensemble::mask_to_string(row.mask).c_str(), row.prauc,
                  row.rce);
    std::printf("best\t%s\n%s\n",
                ensemble::mask_to_string(result.best_mask).c_str(),
                jpath.c_str());
  });

  auto* c_grid = app.add_subcommand(
      "gridsearch", "exhaustive hyperparameter sweep on the dev split");
  std::string grid_engagement = "like";
  std::vector<std::string> grid_axes;
  c_grid->add_option("--engagement", grid_engagement,
                     "engagement type (reply, retweet, quote, like)");
  c_grid->add_option("--param", grid_axes, "grid axis as name=v1,v2,...")
      ->required();
  c_grid->callback([&] {
    auto cfg = load_config(g);
    auto type = parse_engagement(grid_engagement);
    std::vector<std::pair<std::string, std::vector<double>>> grid;
    grid.reserve(grid_axes.size());
    for (const auto& axis : grid_axes) grid.push_back(parse_grid_axis(axis));

    auto data = pipeline::load_stage1(cfg);
    auto blocks = pipeline::compute_blocks(
        data, pipeline::preset_groups(cfg.preset), cfg, nullptr);
    std::array<const FeatureBlock*, 4> ptrs{};
    for (unsigned i = 0; i < 4; ++i)
      if (blocks[i]) ptrs[i] = &*blocks[i];
    auto matrix = ensemble::assemble(data.records, ptrs);
    auto result = ensemble::grid_search(matrix.select_rows(data.split.train),
                                        matrix.select_rows(data.split.dev),
                                        type, booster_params(cfg, type), grid);
    fs::create_directories(pipeline::reports_dir(cfg));
    auto jpath = (fs::path(pipeline::reports_dir(cfg)) /
                  ("gridsearch_" + grid_engagement + ".json"))
                     .string();
    util::write_file(jpath, ensemble::grid_to_json(result));
    const auto& best = result.points[result.best_index];
    std::printf("points\t%zu\nbest\t%zu\tprauc %.6f\trce %.4f\n%s\n",
                result.points.size(), result.best_index, best.valid_prauc,
                best.valid_rce, jpath.c_str());
  });

  // global flags may follow the subcommand name
  for (auto* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
}
