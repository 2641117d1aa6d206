#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "run_output.hpp"
#include "skillrank/evaluator.hpp"
#include "skillrank/trainer.hpp"

namespace skillrank::cli {

struct DataOptions {
  std::string manifest;
  std::string pairs;
};

struct TrainOptions {
  std::string loss = "rank3";
  double margin = 1.0;
  std::size_t splits = 7;
  double beta = 0.5;
  std::size_t batch_size = 128;
  double momentum = 0.9;
  std::string lr_schedule;
  std::string spatial_lr_schedule;
  std::string temporal_lr_schedule;
  std::size_t iterations = 0;
  std::size_t spatial_iterations = 0;
  std::size_t temporal_iterations = 0;
  std::optional<std::vector<std::size_t>> hidden;
  std::string activation = "relu";
  double dropout = 0.0;
  std::string modality = "all";

  TrainConfig stream_config(Modality modality, std::uint64_t root_seed) const;
};

struct EvalOptions {
  double alpha = 0.4;
  std::size_t sigma = 25;
  std::string mode = "uniform";

  EvalConfig config(std::uint64_t root_seed) const;
};

// "0:1e-3,1500:1e-4" -> {{0, 1e-3}, {1500, 1e-4}}.
LrSchedule parse_lr_schedule(const std::string& text);

struct IngestOptions {
  std::string manifest;
  bool normalize = false;
};
void cmd_ingest(const IngestOptions& opt, RunOutput& run, std::ostream& out);

struct ConsensusOptions {
  std::string judgments;
  std::string qc_truth;
  std::string resolutions;
  int workers_per_pair = 4;
  bool from_scores = false;
  std::string manifest;
};
void cmd_consensus(const ConsensusOptions& opt, RunOutput& run, std::ostream& out);

void cmd_graph_check(const std::string& pairs, RunOutput& run, std::ostream& out);

struct FoldsOptions {
  std::string manifest;
  int folds = 4;
};
void cmd_folds(const FoldsOptions& opt, std::uint64_t seed, RunOutput& run,
               std::ostream& out);

void cmd_train(const DataOptions& data, const TrainOptions& train,
               const EvalOptions& eval, std::uint64_t seed, RunOutput& run,
               std::ostream& out);

struct ModelOptions {
  std::string params_dir;
};
void cmd_evaluate(const DataOptions& data, const ModelOptions& model,
                  const EvalOptions& eval, std::uint64_t seed, RunOutput& run,
                  std::ostream& out);

struct CrossValidateOptions {
  int folds = 4;
  bool permute_videos = false;
  bool shuffle_labels = false;
  std::size_t snippet_sigma_max = 0;
};
void cmd_cross_validate(const DataOptions& data, const TrainOptions& train,
                        const EvalOptions& eval, const CrossValidateOptions& cv,
                        std::uint64_t seed, RunOutput& run, std::ostream& out);

void cmd_sweep_alpha(const DataOptions& data, const ModelOptions& model,
                     std::size_t sigma, std::uint64_t seed, RunOutput& run,
                     std::ostream& out);

struct SnippetCurveOptions {
  double alpha = 0.4;
  std::size_t sigma_max = 25;
  std::vector<std::string> modes = {"uniform", "start", "end", "random"};
};
void cmd_snippet_curve(const DataOptions& data, const ModelOptions& model,
                       const SnippetCurveOptions& curve, std::uint64_t seed,
                       RunOutput& run, std::ostream& out);

struct BaselineOptions {
  double c = 1.0;
  std::size_t steps = 10000;
  double alpha = 0.4;
  int folds = 4;
};
void cmd_baseline(const DataOptions& data, const BaselineOptions& opt,
                  std::uint64_t seed, RunOutput& run, std::ostream& out);

struct ServeOptions {
  std::string task_id;
  std::string pairs;
  std::string qc_pool;
  int workers_per_pair = 4;
  std::string store;
  std::string media;
  std::string host = "127.0.0.1";
  int port = 8080;
};
void cmd_serve(const ServeOptions& opt, std::uint64_t seed, RunOutput& run,
               std::ostream& out);

struct SynthesizeOptions {
  std::size_t videos = 40;
  std::size_t min_rows = 60;
  std::size_t max_rows = 100;
  std::size_t spatial_dim = 16;
  std::size_t temporal_dim = 16;
  double snr = 5.0;
  int score_levels = 0;
  std::size_t similar_clusters = 0;
  std::size_t cluster_size = 2;
  double signal_fraction = 1.0;
};
void cmd_synthesize(const SynthesizeOptions& opt, std::uint64_t seed, RunOutput& run,
                    std::ostream& out);

void cmd_correlate_time(const std::string& manifest, RunOutput& run,
                        std::ostream& out);

}  // namespace skillrank::cli
