#include "commands.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "skillrank/annotation.hpp"
#include "skillrank/annotation_service.hpp"
#include "skillrank/baseline.hpp"
#include "skillrank/error.hpp"
#include "skillrank/seeding.hpp"
#include "skillrank/synthetic.hpp"

namespace skillrank::cli {

using json = nlohmann::json;

namespace {

TaskDataset load_dataset(const std::string& manifest_path, RunOutput& run) {
  if (manifest_path.empty()) throw Error(ErrorCode::kConfiguration, "--manifest is required");
  const Manifest manifest = read_manifest(manifest_path);
  run.add_input(manifest_path);
  for (const auto& video : manifest.videos) {
    for (const auto& [modality, file] : video.files) {
      const auto path = manifest.base_dir / file;
      if (std::filesystem::exists(path)) run.add_input(path);
    }
  }
  return assemble_dataset(manifest);
}

PairSets load_pairs(const std::string& path, RunOutput& run) {
  if (path.empty()) throw Error(ErrorCode::kConfiguration, "--pairs is required");
  run.add_input(path);
  const auto pairs = read_pairs_jsonl(path);
  return make_pair_sets(pairs);
}

std::vector<Modality> select_modalities(const TaskDataset& dataset,
                                        const std::string& choice) {
  if (choice == "all") return dataset.modalities;
  const Modality m = parse_modality(choice);
  if (!dataset.has_modality(m)) {
    throw Error(ErrorCode::kMissingModality,
                "dataset has no " + std::string(modality_name(m)) + " stream");
  }
  return {m};
}

TaskDataset restrict_streams(const TaskDataset& dataset,
                             const std::vector<Modality>& keep) {
  TaskDataset out = dataset;
  out.modalities = keep;
  for (auto& [video, streams] : out.sequences) {
    std::erase_if(streams, [&](const auto& kv) {
      return std::find(keep.begin(), keep.end(), kv.first) == keep.end();
    });
  }
  return out;
}

std::string params_name(Modality m) { return std::string(modality_name(m)) + ".skp"; }

TwoStreamModel load_model(const std::string& dir, const TaskDataset& dataset,
                          RunOutput& run) {
  if (dir.empty()) throw Error(ErrorCode::kConfiguration, "--params is required");
  TwoStreamModel model;
  for (Modality m : dataset.modalities) {
    const auto path = std::filesystem::path(dir) / params_name(m);
    if (!std::filesystem::exists(path)) continue;
    run.add_input(path);
    (m == Modality::kSpatial ? model.spatial : model.temporal) = load_params(path);
  }
  if (!model.spatial && !model.temporal) {
    throw Error(ErrorCode::kConfiguration, "no stream parameters found in " + dir);
  }
  return model;
}

json ranking_json(const SkillRanking& ranking) {
  json j = json::array();
  for (const auto& video : ranking.order) {
    j.push_back({{"video", video}, {"score", ranking.scores.at(video)}});
  }
  return j;
}

json bucket_json(const std::map<int, BucketAccuracy>& buckets) {
  json j = json::object();
  for (const auto& [sep, b] : buckets) {
    j[std::to_string(sep)] = {
        {"correct", b.correct}, {"total", b.total}, {"precision", b.precision}};
  }
  return j;
}

void emit(std::ostream& out, const json& summary) { out << summary.dump() << "\n"; }

}  // namespace

LrSchedule parse_lr_schedule(const std::string& text) {
  LrSchedule schedule;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw Error(ErrorCode::kConfiguration,
                  "learning-rate step '" + item + "' is not iteration:rate");
    }
    try {
      schedule.push_back({std::stoul(item.substr(0, colon)),
                          std::stod(item.substr(colon + 1))});
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfiguration,
                  "learning-rate step '" + item + "' is not iteration:rate");
    }
  }
  if (schedule.empty()) throw Error(ErrorCode::kConfiguration, "empty learning-rate schedule");
  return schedule;
}

TrainConfig TrainOptions::stream_config(Modality modality, std::uint64_t root_seed) const {
  TrainConfig cfg = TrainConfig::defaults_for(modality);
  cfg.variant = parse_loss_variant(loss);
  cfg.margin = margin;
  cfg.splits = splits;
  cfg.beta = beta;
  cfg.batch_size = batch_size;
  cfg.momentum = momentum;
  const bool spatial = modality == Modality::kSpatial;
  const std::string& stream_schedule = spatial ? spatial_lr_schedule : temporal_lr_schedule;
  if (!stream_schedule.empty()) {
    cfg.lr_schedule = parse_lr_schedule(stream_schedule);
  } else if (!lr_schedule.empty()) {
    cfg.lr_schedule = parse_lr_schedule(lr_schedule);
  }
  const std::size_t stream_iterations = spatial ? spatial_iterations : temporal_iterations;
  if (stream_iterations > 0) {
    cfg.max_iterations = stream_iterations;
  } else if (iterations > 0) {
    cfg.max_iterations = iterations;
  }
  if (hidden) {
    std::vector<std::size_t> widths;
    for (std::size_t w : *hidden) {
      if (w > 0) widths.push_back(w);
    }
    cfg.hidden = widths;
  }
  if (activation == "relu") {
    cfg.activation = Activation::kRelu;
  } else if (activation == "tanh") {
    cfg.activation = Activation::kTanh;
  } else {
    throw Error(ErrorCode::kConfiguration, "unknown activation '" + activation + "'");
  }
  cfg.dropout = dropout;
  cfg.seed = derive_seed(root_seed, {"train", modality_name(modality)});
  cfg.validate();
  return cfg;
}

EvalConfig EvalOptions::config(std::uint64_t root_seed) const {
  EvalConfig cfg;
  cfg.alpha = alpha;
  cfg.sigma = sigma;
  cfg.mode = parse_snippet_mode(mode);
  cfg.seed = derive_seed(root_seed, "eval");
  cfg.validate();
  return cfg;
}

void cmd_ingest(const IngestOptions& opt, RunOutput& run, std::ostream& out) {
  Manifest manifest = read_manifest(opt.manifest);
  const TaskDataset dataset = load_dataset(opt.manifest, run);
  json report;
  report["task_id"] = dataset.task_id;
  report["videos"] = dataset.videos.size();
  report["streams"] = json::object();
  for (Modality m : dataset.modalities) {
    std::size_t min_rows = SIZE_MAX;
    std::size_t max_rows = 0;
    for (const auto& v : dataset.videos) {
      const std::size_t rows = dataset.sequence(v, m).rows();
      min_rows = std::min(min_rows, rows);
      max_rows = std::max(max_rows, rows);
    }
    report["streams"][std::string(modality_name(m))] = {
        {"dim", dataset.dim(m)}, {"min_rows", min_rows}, {"max_rows", max_rows}};
  }
  report["scored_videos"] = dataset.scores.size();
  if (opt.normalize) {
    const TaskDataset raw = assemble_dataset(manifest, false);
    manifest.normalization = compute_normalization(raw);
    const auto target_dir = std::filesystem::absolute(run.root());
    for (auto& video : manifest.videos) {
      for (auto& [m, file] : video.files) {
        const auto abs = std::filesystem::absolute(manifest.base_dir / file);
        file = std::filesystem::relative(abs, target_dir).generic_string();
      }
    }
    manifest.base_dir = run.root();
    run.write("manifest.json", manifest_to_json(manifest));
    report["normalized_manifest"] = "manifest.json";
  }
  run.write_report("ingest.json", report.dump(2) + "\n");
  emit(out, report);
}

void cmd_consensus(const ConsensusOptions& opt, RunOutput& run, std::ostream& out) {
  json report;
  PairSets sets;
  if (opt.from_scores) {
    const TaskDataset dataset = load_dataset(opt.manifest, run);
    if (dataset.scores.empty()) {
      throw Error(ErrorCode::kData, "manifest carries no scores");
    }
    sets = pairs_from_scores(dataset.scores);
    report["source"] = "scores";
  } else {
    if (opt.judgments.empty() || opt.qc_truth.empty()) {
      throw Error(ErrorCode::kConfiguration,
                  "--judgments and --qc-truth are required without --from-scores");
    }
    run.add_input(opt.judgments);
    run.add_input(opt.qc_truth);
    const auto judgments = read_judgments_jsonl(opt.judgments);
    const auto qc_pairs = read_pairs_jsonl(opt.qc_truth);
    std::vector<std::pair<std::string, std::string>> drops;
    if (!opt.resolutions.empty()) {
      run.add_input(opt.resolutions);
      drops = parse_edge_list(read_text_file(opt.resolutions));
    }
    const AnnotationResult result = process_judgments(
        judgments, qc_truth_from_pairs(qc_pairs), opt.workers_per_pair, drops);
    sets = result.sets;
    report["source"] = "judgments";
    report["judgments_in"] = result.judgments_in;
    report["judgments_kept"] = result.judgments_kept;
    report["inconsistent"] = result.inconsistent.size();
    report["dropped_by_resolution"] = result.dropped.size();
  }
  report["psi"] = sets.psi.size();
  report["phi"] = sets.phi.size();
  const auto all = sets.all();
  run.write("pairs.jsonl", pairs_to_jsonl(all));
  run.write_report("consensus.json", report.dump(2) + "\n");
  emit(out, report);
}

void cmd_graph_check(const std::string& pairs_path, RunOutput& run, std::ostream& out) {
  const PairSets sets = load_pairs(pairs_path, run);
  const PairGraph graph = build_pair_graph(sets.psi);
  const auto cycles = find_cycles(graph);
  if (!cycles.empty()) {
    std::string listing;
    for (const auto& c : cycles) {
      if (!listing.empty()) listing += "; ";
      listing += format_cycle(c);
    }
    throw Error(ErrorCode::kCyclicGraph,
                std::to_string(cycles.size()) + " cycle(s): " + listing);
  }
  const auto ranks = longest_path_ranks(graph);
  json report;
  report["nodes"] = graph.nodes().size();
  report["edges"] = graph.edge_count();
  report["acyclic"] = true;
  report["phi"] = sets.phi.size();
  report["ranks"] = ranks;
  run.write_report("graph.json", report.dump(2) + "\n");
  emit(out, {{"nodes", report["nodes"]}, {"edges", report["edges"]}, {"acyclic", true}});
}

void cmd_folds(const FoldsOptions& opt, std::uint64_t seed, RunOutput& run,
               std::ostream& out) {
  const TaskDataset dataset = load_dataset(opt.manifest, run);
  const std::uint64_t fold_seed = derive_seed(seed, "folds");
  run.add_seed("folds", fold_seed);
  const auto folds = make_folds(dataset.videos, opt.folds, fold_seed);
  json report = {{"folds", folds}};
  run.write_report("folds.json", report.dump(2) + "\n");
  json sizes = json::array();
  for (const auto& f : folds) sizes.push_back(f.size());
  emit(out, {{"folds", folds.size()}, {"sizes", sizes}});
}

void cmd_train(const DataOptions& data, const TrainOptions& train,
               const EvalOptions& eval, std::uint64_t seed, RunOutput& run,
               std::ostream& out) {
  const TaskDataset dataset = load_dataset(data.manifest, run);
  const PairSets pairs = load_pairs(data.pairs, run);
  const EvalConfig eval_cfg = eval.config(seed);
  run.add_seed("eval", eval_cfg.seed);

  TwoStreamModel model;
  json report;
  report["streams"] = json::object();
  for (Modality m : select_modalities(dataset, train.modality)) {
    const TrainConfig cfg = train.stream_config(m, seed);
    const std::string name(modality_name(m));
    run.add_seed("train/" + name, cfg.seed);
    TrainResult result = train_stream(dataset, m, pairs, cfg);
    run.write_params(params_name(m), to_params_file(result.params));
    run.write_trace(name + ".jsonl", trace_to_jsonl(result.trace));
    report["streams"][name] = {
        {"iterations", result.trace.size()},
        {"final_loss", result.trace.empty() ? 0.0 : result.trace.back().loss},
        {"parameters", result.params.parameter_count()}};
    (m == Modality::kSpatial ? model.spatial : model.temporal) = std::move(result.params);
  }
  const SkillRanking ranking = rank_videos(model, dataset, dataset.videos, eval_cfg);
  report["train_precision"] = pairwise_precision(ranking, pairs.psi);
  run.write_report("train.json", report.dump(2) + "\n");
  emit(out, {{"train_precision", report["train_precision"]}});
}

void cmd_evaluate(const DataOptions& data, const ModelOptions& model_opt,
                  const EvalOptions& eval, std::uint64_t seed, RunOutput& run,
                  std::ostream& out) {
  const TaskDataset dataset = load_dataset(data.manifest, run);
  const PairSets pairs = load_pairs(data.pairs, run);
  const TwoStreamModel model = load_model(model_opt.params_dir, dataset, run);
  const EvalConfig cfg = eval.config(seed);
  run.add_seed("eval", cfg.seed);
  const SkillRanking ranking = rank_videos(model, dataset, dataset.videos, cfg);
  json report;
  report["precision"] = pairwise_precision(ranking, pairs.psi);
  report["ordered_pairs"] = pairs.psi.size();
  report["ranking"] = ranking_json(ranking);
  const PairGraph graph = build_pair_graph(pairs.psi);
  report["per_separation"] = bucket_json(separation_accuracy(graph, ranking, pairs.psi));
  run.write_report("evaluation.json", report.dump(2) + "\n");
  emit(out, {{"precision", report["precision"]}});
}

void cmd_cross_validate(const DataOptions& data, const TrainOptions& train,
                        const EvalOptions& eval, const CrossValidateOptions& cv,
                        std::uint64_t seed, RunOutput& run, std::ostream& out) {
  const TaskDataset full = load_dataset(data.manifest, run);
  const TaskDataset dataset = restrict_streams(full, select_modalities(full, train.modality));
  PairSets pairs = load_pairs(data.pairs, run);
  if (cv.permute_videos) {
    const std::uint64_t permute_seed = derive_seed(seed, "permute");
    run.add_seed("permute", permute_seed);
    pairs = permute_video_labels(pairs, dataset.videos, permute_seed);
  }
  if (cv.shuffle_labels) {
    const std::uint64_t shuffle_seed = derive_seed(seed, "shuffle");
    run.add_seed("shuffle", shuffle_seed);
    pairs = shuffle_pair_labels(pairs, shuffle_seed);
  }
  CrossValidationConfig cfg;
  cfg.spatial = train.stream_config(Modality::kSpatial, seed);
  cfg.temporal = train.stream_config(Modality::kTemporal, seed);
  cfg.eval = eval.config(seed);
  cfg.folds = cv.folds;
  cfg.seed = derive_seed(seed, "cross-validate");
  cfg.snippet_sigma_max = cv.snippet_sigma_max;
  run.add_seed("cross-validate", cfg.seed);
  run.add_seed("eval", cfg.eval.seed);

  const CrossValidationReport report = cross_validate(dataset, pairs, cfg);
  run.write_report("cross_validation.json", report_to_json(report));
  run.write_report("alpha_curve.csv", alpha_curve_csv(report));
  run.write_report("separation.csv", separation_csv(report));
  if (cv.snippet_sigma_max > 0) {
    run.write_report("snippet_curve.csv", snippet_curve_csv(report));
  }
  json folds = json::array();
  for (const auto& f : report.folds) folds.push_back(f.precision);
  emit(out, {{"mean_precision", report.mean}, {"folds", folds}});
}

void cmd_sweep_alpha(const DataOptions& data, const ModelOptions& model_opt,
                     std::size_t sigma, std::uint64_t seed, RunOutput& run,
                     std::ostream& out) {
  const TaskDataset dataset = load_dataset(data.manifest, run);
  const PairSets pairs = load_pairs(data.pairs, run);
  const TwoStreamModel model = load_model(model_opt.params_dir, dataset, run);
  const std::uint64_t eval_seed = derive_seed(seed, "eval");
  run.add_seed("eval", eval_seed);
  const auto sweep = alpha_sweep(model, dataset, dataset.videos, pairs.psi, sigma, eval_seed);
  std::ostringstream csv;
  csv << "alpha,precision\n";
  json points = json::array();
  csv.precision(17);
  for (const auto& p : sweep) {
    csv << p.alpha << "," << p.precision << "\n";
    points.push_back({{"alpha", p.alpha}, {"precision", p.precision}});
  }
  run.write_report("alpha_sweep.csv", csv.str());
  const auto best = std::max_element(sweep.begin(), sweep.end(), [](auto& a, auto& b) {
    return a.precision < b.precision;
  });
  emit(out, {{"best_alpha", best->alpha}, {"best_precision", best->precision},
             {"points", points}});
}

void cmd_snippet_curve(const DataOptions& data, const ModelOptions& model_opt,
                       const SnippetCurveOptions& curve, std::uint64_t seed,
                       RunOutput& run, std::ostream& out) {
  const TaskDataset dataset = load_dataset(data.manifest, run);
  const PairSets pairs = load_pairs(data.pairs, run);
  const TwoStreamModel model = load_model(model_opt.params_dir, dataset, run);
  std::vector<SnippetMode> modes;
  for (const auto& m : curve.modes) modes.push_back(parse_snippet_mode(m));
  const std::uint64_t eval_seed = derive_seed(seed, "eval");
  run.add_seed("eval", eval_seed);
  const auto curves = snippet_curve(model, dataset, dataset.videos, pairs.psi,
                                    curve.alpha, curve.sigma_max, modes, eval_seed);
  std::ostringstream csv;
  csv.precision(17);
  csv << "mode,sigma,precision\n";
  json summary = json::object();
  for (const auto& [mode, points] : curves) {
    for (const auto& p : points) {
      csv << snippet_mode_name(mode) << "," << p.sigma << "," << p.precision << "\n";
    }
    summary[std::string(snippet_mode_name(mode))] = points.back().precision;
  }
  run.write_report("snippet_curve.csv", csv.str());
  emit(out, {{"precision_at_sigma_max", summary}});
}

void cmd_baseline(const DataOptions& data, const BaselineOptions& opt,
                  std::uint64_t seed, RunOutput& run, std::ostream& out) {
  const TaskDataset dataset = load_dataset(data.manifest, run);
  const PairSets pairs = load_pairs(data.pairs, run);
  BaselineConfig cfg;
  cfg.svm.c = opt.c;
  cfg.svm.steps = opt.steps;
  cfg.svm.seed = derive_seed(seed, "ranksvm");
  cfg.alpha = opt.alpha;
  cfg.folds = opt.folds;
  cfg.seed = derive_seed(seed, "cross-validate");
  run.add_seed("ranksvm", cfg.svm.seed);
  run.add_seed("cross-validate", cfg.seed);
  const CrossValidationReport report = ranksvm_cross_validate(dataset, pairs, cfg);
  run.write_report("baseline.json", report_to_json(report));

  std::map<Modality, VideoFeatures> features;
  BaselineModel model;
  for (Modality m : dataset.modalities) {
    features[m] = video_features(dataset, m);
    LinearRanker ranker = ranksvm_train(features[m], pairs.psi, cfg.svm);
    run.write_params("baseline_" + params_name(m), to_params_file(ranker));
    (m == Modality::kSpatial ? model.spatial : model.temporal) = std::move(ranker);
  }
  const SkillRanking ranking =
      ranksvm_score(model, features, dataset.videos, opt.alpha, dataset.task_id);
  const double train_precision = pairwise_precision(ranking, pairs.psi);
  emit(out, {{"mean_precision", report.mean}, {"train_precision", train_precision}});
}

void cmd_serve(const ServeOptions& opt, std::uint64_t seed, RunOutput& run,
               std::ostream& out) {
  if (opt.task_id.empty() || opt.pairs.empty() || opt.qc_pool.empty()) {
    throw Error(ErrorCode::kConfiguration, "--task, --pairs and --qc-pool are required");
  }
  run.add_input(opt.pairs);
  run.add_input(opt.qc_pool);
  std::vector<PairKey> task_pairs;
  for (const auto& p : read_pairs_jsonl(opt.pairs)) task_pairs.push_back(PairKey::of(p.i, p.j));
  const auto qc = read_pairs_jsonl(opt.qc_pool);
  const std::uint64_t hit_seed = derive_seed(seed, "hits");
  run.add_seed("hits", hit_seed);
  auto hits = build_hits(opt.task_id, task_pairs, qc, opt.workers_per_pair, hit_seed);
  run.write("hits.json", hits_to_json(hits));
  run.finish();

  const std::filesystem::path store =
      opt.store.empty() ? run.root() / "judgments.jsonl" : std::filesystem::path(opt.store);
  HitService service(opt.task_id, std::move(hits), store, hit_seed);
  AnnotationServer server(service, opt.media.empty() ? run.root() / "media" : std::filesystem::path(opt.media));
  int port = opt.port;
  if (port == 0) {
    port = server.bind_to_any_port(opt.host);
  } else if (!server.bind(opt.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw Error(ErrorCode::kIo, "cannot bind " + opt.host + ":" + std::to_string(opt.port));
  }
  emit(out, {{"listening", opt.host + ":" + std::to_string(port)},
             {"hits", service.hits().size()}});
  out.flush();
  server.listen_after_bind();
}

void cmd_synthesize(const SynthesizeOptions& opt, std::uint64_t seed, RunOutput& run,
                    std::ostream& out) {
  SyntheticConfig cfg;
  cfg.videos = opt.videos;
  cfg.min_rows = opt.min_rows;
  cfg.max_rows = opt.max_rows;
  cfg.spatial_dim = opt.spatial_dim;
  cfg.temporal_dim = opt.temporal_dim;
  cfg.temporal = opt.temporal_dim > 0;
  cfg.snr = opt.snr;
  cfg.score_levels = opt.score_levels;
  cfg.similar_clusters = opt.similar_clusters;
  cfg.cluster_size = opt.cluster_size;
  cfg.signal_fraction = opt.signal_fraction;
  cfg.seed = derive_seed(seed, "synthetic");
  run.add_seed("synthetic", cfg.seed);
  const SyntheticTask task = make_synthetic_task(cfg);
  write_synthetic_task(task, run.root());
  run.write("pairs.jsonl", pairs_to_jsonl(task.pairs.all()));
  json skill = task.skill;
  run.write_report("skill.json", skill.dump(2) + "\n");
  emit(out, {{"manifest", (run.root() / "manifest.json").generic_string()},
             {"videos", task.dataset.videos.size()},
             {"psi", task.pairs.psi.size()},
             {"phi", task.pairs.phi.size()}});
}

void cmd_correlate_time(const std::string& manifest, RunOutput& run, std::ostream& out) {
  const TaskDataset dataset = load_dataset(manifest, run);
  const double rho = time_skill_correlation(dataset);
  json report = {{"spearman_rho", rho},
                 {"videos", dataset.scores.size()},
                 {"time_source", dataset.times.empty() ? "rows" : "manifest"}};
  run.write_report("time_correlation.json", report.dump(2) + "\n");
  emit(out, report);
}

}  // namespace skillrank::cli
