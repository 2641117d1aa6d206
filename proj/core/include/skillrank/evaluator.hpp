#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "skillrank/annotation.hpp"
#include "skillrank/datastore.hpp"
#include "skillrank/sampler.hpp"
#include "skillrank/scorer.hpp"
#include "skillrank/trainer.hpp"

namespace skillrank {

// Videos sorted by descending score, ties broken by ascending video id.
struct SkillRanking {
  std::string task_id;
  std::map<std::string, double> scores;
  std::vector<std::string> order;
};

SkillRanking make_ranking(std::string task_id, std::map<std::string, double> scores);

struct EvalConfig {
  double alpha = 0.4;
  std::size_t sigma = 25;
  SnippetMode mode = SnippetMode::kUniform;
  std::uint64_t seed = 0;

  void validate() const;
};

double fuse(double spatial, double temporal, double alpha);

// One scorer per stream; a missing stream makes the fused score the present
// stream's score.
struct TwoStreamModel {
  std::optional<ScorerParams> spatial;
  std::optional<ScorerParams> temporal;
};

// Mean score of the test snippets drawn from one sequence.
double score_sequence(const ScorerParams& params, const FeatureSequence& seq,
                      std::size_t sigma, SnippetMode mode, std::uint64_t seed);

struct StreamScores {
  std::optional<double> spatial;
  std::optional<double> temporal;
};

double fused_score(const StreamScores& scores, double alpha);

StreamScores score_video_streams(const TwoStreamModel& model,
                                 const TaskDataset& dataset,
                                 const std::string& video, std::size_t sigma,
                                 SnippetMode mode, std::uint64_t seed);

// Test-time score of one video: the mean over sampled snippets of
// alpha * f_s + (1 - alpha) * f_t.
double evaluate_video(const TwoStreamModel& model, const TaskDataset& dataset,
                      const std::string& video, const EvalConfig& cfg);

SkillRanking rank_videos(const TwoStreamModel& model, const TaskDataset& dataset,
                         std::span<const std::string> videos, const EvalConfig& cfg);

// Fraction of label-1 truth pairs ordered strictly correctly. Label-0 pairs are
// ignored. Throws Error(kMissingVideo) for an unranked video and
// Error(kEvaluation) when no ordered pair remains.
double pairwise_precision(const SkillRanking& ranking,
                          std::span<const PairLabel> truth);

struct BucketAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double precision = 0.0;
};

// Ordered truth pairs bucketed by their separation in the graph. Pairs with
// undefined separation are left out.
std::map<int, BucketAccuracy> separation_accuracy(const PairGraph& graph,
                                                  const SkillRanking& ranking,
                                                  std::span<const PairLabel> truth);

struct AlphaPoint {
  double alpha = 0.0;
  double precision = 0.0;
};

// Precision at alpha = 0, 0.1, ..., 1.0.
std::vector<AlphaPoint> alpha_sweep(const TwoStreamModel& model,
                                    const TaskDataset& dataset,
                                    std::span<const std::string> videos,
                                    std::span<const PairLabel> truth,
                                    std::size_t sigma, std::uint64_t seed = 0);

struct CurvePoint {
  std::size_t sigma = 0;
  double precision = 0.0;
};

inline constexpr std::size_t kRandomCurveDraws = 10;

// Precision as a function of the number of test snippets, for sigma =
// 1..sigma_max under each mode. Random mode averages kRandomCurveDraws seeded
// draws.
std::map<SnippetMode, std::vector<CurvePoint>> snippet_curve(
    const TwoStreamModel& model, const TaskDataset& dataset,
    std::span<const std::string> videos, std::span<const PairLabel> truth,
    double alpha, std::size_t sigma_max, std::span<const SnippetMode> modes,
    std::uint64_t seed = 0);

// Spearman rank correlation with average ranks for ties. Throws on length
// mismatch, fewer than two points, or a constant argument.
double spearman_rho(std::span<const double> x, std::span<const double> y);

// Spearman correlation between completion time and score over the videos that
// have a score. Videos without a recorded time fall back to their row count.
double time_skill_correlation(const TaskDataset& dataset);

struct CrossValidationConfig {
  TrainConfig spatial = TrainConfig::defaults_for(Modality::kSpatial);
  TrainConfig temporal = TrainConfig::defaults_for(Modality::kTemporal);
  EvalConfig eval;
  int folds = 4;
  std::uint64_t seed = 0;
  bool alpha_curve = true;
  std::size_t snippet_sigma_max = 0;  // 0 disables the snippet curves
};

struct FoldReport {
  std::size_t fold = 0;
  std::vector<std::string> test_videos;
  std::size_t train_psi = 0;
  std::size_t train_phi = 0;
  std::size_t test_psi = 0;
  double precision = 0.0;
  std::map<int, BucketAccuracy> per_separation;
  std::vector<AlphaPoint> alpha_curve;
  std::map<SnippetMode, std::vector<CurvePoint>> snippet_curves;
};

struct CrossValidationReport {
  std::vector<FoldReport> folds;
  double mean = 0.0;
};

// Trains each of the dataset's streams on every fold's training pairs and
// scores the fold's test pairs. Throws Error(kOrchestration) for a fold with no
// training pairs.
CrossValidationReport cross_validate(const TaskDataset& dataset,
                                     const PairSets& pairs,
                                     const CrossValidationConfig& cfg);

// Relabels every pair through a seeded permutation of the video ids. The
// pair structure survives; its link to the features does not.
PairSets permute_video_labels(const PairSets& pairs,
                              std::span<const std::string> videos,
                              std::uint64_t seed);

// Reassigns the ordered pairs' directions by shuffling them across Psi. The
// number of pairs in each orientation is preserved; similar pairs are kept.
PairSets shuffle_pair_labels(const PairSets& pairs, std::uint64_t seed);

std::string report_to_json(const CrossValidationReport& report);
std::string alpha_curve_csv(const CrossValidationReport& report);
std::string snippet_curve_csv(const CrossValidationReport& report);
std::string separation_csv(const CrossValidationReport& report);

}  // namespace skillrank
