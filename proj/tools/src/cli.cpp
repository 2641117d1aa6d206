#include "skillrank_cli/cli.hpp"

#include <functional>
#include <memory>
#include <ostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "json.hpp"
#include "json_config.hpp"
#include "skillrank/error.hpp"

namespace skillrank::cli {

namespace {

struct Common {
  std::string out = "run";
  std::uint64_t seed = 0;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help,
                      Common& common) {
  CLI::App* sub = app.add_subcommand(name, help);
  sub->config_formatter(std::make_shared<JsonConfig>());
  sub->add_option("--out", common.out, "Run directory")->capture_default_str();
  sub->add_option("--seed", common.seed, "Root seed")->capture_default_str();
  return sub;
}

void add_data(CLI::App* sub, DataOptions& data, bool need_pairs = true) {
  sub->add_option("--manifest", data.manifest, "Dataset manifest")->required();
  auto* pairs = sub->add_option("--pairs", data.pairs, "Pairs JSON-lines file");
  if (need_pairs) pairs->required();
}

void add_train(CLI::App* sub, TrainOptions& t) {
  sub->add_option("--loss", t.loss, "rank1, rank2 or rank3")
      ->check(CLI::IsMember({"rank1", "rank2", "rank3"}))
      ->capture_default_str();
  sub->add_option("--margin", t.margin)->capture_default_str();
  sub->add_option("--splits", t.splits, "Temporal splits N")->capture_default_str();
  sub->add_option("--beta", t.beta, "Ranking/similarity weight")->capture_default_str();
  sub->add_option("--batch-size", t.batch_size)->capture_default_str();
  sub->add_option("--momentum", t.momentum)->capture_default_str();
  sub->add_option("--lr-schedule", t.lr_schedule, "iteration:rate,... for every stream");
  sub->add_option("--spatial-lr-schedule", t.spatial_lr_schedule);
  sub->add_option("--temporal-lr-schedule", t.temporal_lr_schedule);
  sub->add_option("--iterations", t.iterations, "Iterations for every stream");
  sub->add_option("--spatial-iterations", t.spatial_iterations);
  sub->add_option("--temporal-iterations", t.temporal_iterations);
  sub->add_option("--hidden", t.hidden, "Hidden widths; 0 for a linear scorer")
      ->delimiter(',');
  sub->add_option("--activation", t.activation)
      ->check(CLI::IsMember({"relu", "tanh"}))
      ->capture_default_str();
  sub->add_option("--dropout", t.dropout)->capture_default_str();
  sub->add_option("--modality", t.modality, "all, spatial or temporal")
      ->check(CLI::IsMember({"all", "spatial", "temporal"}))
      ->capture_default_str();
}

void add_eval(CLI::App* sub, EvalOptions& e) {
  sub->add_option("--alpha", e.alpha, "Spatial weight in stream fusion")
      ->capture_default_str();
  sub->add_option("--sigma", e.sigma, "Test snippets per video")->capture_default_str();
  sub->add_option("--mode", e.mode, "uniform, start, end or random")
      ->check(CLI::IsMember({"uniform", "start", "end", "random"}))
      ->capture_default_str();
}

void write_error(std::ostream& err, const std::string& code, const std::string& message) {
  nlohmann::json j = {{"error", {{"code", code}, {"message", message}}}};
  err << j.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pairwise skill ranking of task videos", "skillrank"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON file of flag values; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Common common;
  DataOptions data;
  TrainOptions train;
  EvalOptions eval;
  ModelOptions model;
  std::function<void(RunOutput&)> action;

  IngestOptions ingest;
  auto* c_ingest = add_command(app, "ingest", "Validate a dataset manifest", common);
  c_ingest->add_option("--manifest", ingest.manifest)->required();
  c_ingest->add_flag("--normalize", ingest.normalize,
                     "Write a manifest with per-dimension normalization");
  c_ingest->callback([&] { action = [&](RunOutput& r) { cmd_ingest(ingest, r, out); }; });

  ConsensusOptions consensus;
  auto* c_cons = add_command(app, "consensus", "Turn judgments into consistent/similar pairs",
                             common);
  c_cons->add_option("--judgments", consensus.judgments);
  c_cons->add_option("--qc-truth", consensus.qc_truth, "QC pairs with known direction");
  c_cons->add_option("--resolutions", consensus.resolutions,
                     "JSON list of {winner, loser} edges to drop");
  c_cons->add_option("--workers-per-pair", consensus.workers_per_pair)->capture_default_str();
  c_cons->add_flag("--from-scores", consensus.from_scores,
                   "Derive pairs from manifest scores");
  c_cons->add_option("--manifest", consensus.manifest);
  c_cons->callback([&] { action = [&](RunOutput& r) { cmd_consensus(consensus, r, out); }; });

  std::string graph_pairs;
  auto* c_graph = add_command(app, "graph-check", "Check a pairs file for cycles", common);
  c_graph->add_option("--pairs", graph_pairs)->required();
  c_graph->callback([&] {
    action = [&](RunOutput& r) { cmd_graph_check(graph_pairs, r, out); };
  });

  FoldsOptions folds;
  auto* c_folds = add_command(app, "folds", "Seeded video folds", common);
  c_folds->add_option("--manifest", folds.manifest)->required();
  c_folds->add_option("--folds", folds.folds)->capture_default_str();
  c_folds->callback([&] {
    action = [&](RunOutput& r) { cmd_folds(folds, common.seed, r, out); };
  });

  auto* c_train = add_command(app, "train", "Train stream scorers on all pairs", common);
  add_data(c_train, data);
  add_train(c_train, train);
  add_eval(c_train, eval);
  c_train->callback([&] {
    action = [&](RunOutput& r) { cmd_train(data, train, eval, common.seed, r, out); };
  });

  auto* c_eval = add_command(app, "evaluate", "Rank videos and score against pairs", common);
  add_data(c_eval, data);
  c_eval->add_option("--params", model.params_dir, "Directory of <stream>.skp files")
      ->required();
  add_eval(c_eval, eval);
  c_eval->callback([&] {
    action = [&](RunOutput& r) { cmd_evaluate(data, model, eval, common.seed, r, out); };
  });

  CrossValidateOptions cv;
  auto* c_cv = add_command(app, "cross-validate", "K-fold train and test", common);
  add_data(c_cv, data);
  add_train(c_cv, train);
  add_eval(c_cv, eval);
  c_cv->add_option("--folds", cv.folds)->capture_default_str();
  c_cv->add_flag("--permute-videos", cv.permute_videos,
                 "Relabel pairs through a seeded video permutation");
  c_cv->add_flag("--shuffle-labels", cv.shuffle_labels,
                 "Shuffle pair directions across the ordered pairs");
  c_cv->add_option("--snippet-sigma-max", cv.snippet_sigma_max,
                   "Also record snippet curves up to this sigma")
      ->capture_default_str();
  c_cv->callback([&] {
    action = [&](RunOutput& r) {
      cmd_cross_validate(data, train, eval, cv, common.seed, r, out);
    };
  });

  auto* c_alpha = add_command(app, "sweep-alpha", "Precision across fusion weights", common);
  add_data(c_alpha, data);
  c_alpha->add_option("--params", model.params_dir)->required();
  c_alpha->add_option("--sigma", eval.sigma)->capture_default_str();
  c_alpha->callback([&] {
    action = [&](RunOutput& r) {
      cmd_sweep_alpha(data, model, eval.sigma, common.seed, r, out);
    };
  });

  SnippetCurveOptions curve;
  auto* c_curve = add_command(app, "snippet-curve", "Precision against test snippet count",
                              common);
  add_data(c_curve, data);
  c_curve->add_option("--params", model.params_dir)->required();
  c_curve->add_option("--alpha", curve.alpha)->capture_default_str();
  c_curve->add_option("--sigma-max", curve.sigma_max)->capture_default_str();
  c_curve->add_option("--modes", curve.modes)
      ->delimiter(',')
      ->check(CLI::IsMember({"uniform", "start", "end", "random"}))
      ->capture_default_str();
  c_curve->callback([&] {
    action = [&](RunOutput& r) { cmd_snippet_curve(data, model, curve, common.seed, r, out); };
  });

  BaselineOptions baseline;
  auto* c_base = add_command(app, "baseline", "RankSVM on mean video features", common);
  add_data(c_base, data);
  c_base->add_option("--c", baseline.c)->capture_default_str();
  c_base->add_option("--steps", baseline.steps)->capture_default_str();
  c_base->add_option("--alpha", baseline.alpha)->capture_default_str();
  c_base->add_option("--folds", baseline.folds)->capture_default_str();
  c_base->callback([&] {
    action = [&](RunOutput& r) { cmd_baseline(data, baseline, common.seed, r, out); };
  });

  ServeOptions serve;
  auto* c_serve = add_command(app, "serve", "Serve annotation HITs over HTTP", common);
  c_serve->add_option("--task", serve.task_id)->required();
  c_serve->add_option("--pairs", serve.pairs, "Pairs needing annotation")->required();
  c_serve->add_option("--qc-pool", serve.qc_pool, "QC pairs with known direction")
      ->required();
  c_serve->add_option("--workers-per-pair", serve.workers_per_pair)->capture_default_str();
  c_serve->add_option("--store", serve.store, "Judgment store (default <out>/judgments.jsonl)");
  c_serve->add_option("--media", serve.media, "Video directory");
  c_serve->add_option("--host", serve.host)->capture_default_str();
  c_serve->add_option("--port", serve.port, "0 picks a free port")->capture_default_str();
  c_serve->callback([&] {
    action = [&](RunOutput& r) { cmd_serve(serve, common.seed, r, out); };
  });

  std::string time_manifest;
  auto* c_time = add_command(app, "correlate-time",
                             "Spearman correlation of completion time and skill", common);
  c_time->add_option("--manifest", time_manifest)->required();
  c_time->callback([&] {
    action = [&](RunOutput& r) { cmd_correlate_time(time_manifest, r, out); };
  });

  SynthesizeOptions synth;
  auto* c_synth = add_command(app, "synthesize",
                              "Write a planted latent-skill dataset and its pairs", common);
  c_synth->add_option("--videos", synth.videos)->capture_default_str();
  c_synth->add_option("--min-rows", synth.min_rows)->capture_default_str();
  c_synth->add_option("--max-rows", synth.max_rows)->capture_default_str();
  c_synth->add_option("--spatial-dim", synth.spatial_dim)->capture_default_str();
  c_synth->add_option("--temporal-dim", synth.temporal_dim, "0 omits the temporal stream")
      ->capture_default_str();
  c_synth->add_option("--snr", synth.snr)->capture_default_str();
  c_synth->add_option("--score-levels", synth.score_levels, "0 keeps scores continuous")
      ->capture_default_str();
  c_synth->add_option("--similar-clusters", synth.similar_clusters)->capture_default_str();
  c_synth->add_option("--cluster-size", synth.cluster_size)->capture_default_str();
  c_synth->add_option("--signal-fraction", synth.signal_fraction)->capture_default_str();
  c_synth->callback([&] {
    action = [&](RunOutput& r) { cmd_synthesize(synth, common.seed, r, out); };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    write_error(err, "usage", e.what());
    return 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    RunOutput run(common.out, chosen->get_name());
    run.add_seed("root", common.seed);
    run.set_config(chosen->config_to_str(true, false));
    action(run);
    run.finish();
  } catch (const Error& e) {
    write_error(err, std::string(error_code_name(e.code())), e.what());
    return 1;
  } catch (const std::exception& e) {
    write_error(err, "internal", e.what());
    return 1;
  }
  return 0;
}

}  // namespace skillrank::cli
