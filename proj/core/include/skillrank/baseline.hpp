#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skillrank/annotation.hpp"
#include "skillrank/datastore.hpp"
#include "skillrank/evaluator.hpp"
#include "skillrank/scorer.hpp"

namespace skillrank {

// Linear pairwise max-margin ranker (RankSVM) on whole-video features.
struct LinearRanker {
  std::vector<double> weights;
  double c = 1.0;

  double score(std::span<const double> x) const;
};

// Mean of all rows.
std::vector<double> video_feature(const FeatureSequence& seq);

using VideoFeatures = std::map<std::string, std::vector<double>>;

VideoFeatures video_features(const TaskDataset& dataset, Modality modality);

struct RankSvmOptions {
  double c = 1.0;
  std::size_t steps = 10000;
  std::uint64_t seed = 0;
};

// 0.5 * |w|^2 + C * sum over psi of max(0, 1 - w.(x_i - x_j)).
double ranksvm_objective(const LinearRanker& ranker, const VideoFeatures& features,
                         std::span<const PairLabel> psi);

// Seeded stochastic subgradient descent on the objective above; returns the
// iterate with the lowest objective seen. Throws Error(kTraining) on empty psi.
LinearRanker ranksvm_train(const VideoFeatures& features,
                           std::span<const PairLabel> psi,
                           const RankSvmOptions& options = {});

struct BaselineModel {
  std::optional<LinearRanker> spatial;
  std::optional<LinearRanker> temporal;
};

// alpha * (w_s.x_s) + (1 - alpha) * (w_t.x_t), ranked descending.
SkillRanking ranksvm_score(const BaselineModel& model,
                           const std::map<Modality, VideoFeatures>& features,
                           std::span<const std::string> videos, double alpha,
                           const std::string& task_id = {});

ParamsFile to_params_file(const LinearRanker& ranker);
LinearRanker ranker_from_params_file(const ParamsFile& file);

struct BaselineConfig {
  RankSvmOptions svm;
  double alpha = 0.4;
  int folds = 4;
  std::uint64_t seed = 0;
};

// Same fold protocol as cross_validate, with RankSVM in place of the Siamese
// scorer.
CrossValidationReport ranksvm_cross_validate(const TaskDataset& dataset,
                                             const PairSets& pairs,
                                             const BaselineConfig& cfg);

}  // namespace skillrank
