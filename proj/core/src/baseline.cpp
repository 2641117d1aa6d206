#include "skillrank/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "skillrank/error.hpp"
#include "skillrank/seeding.hpp"

namespace skillrank {
namespace {

std::vector<double> difference(const VideoFeatures& features, const PairLabel& p) {
  auto fi = features.find(p.i);
  auto fj = features.find(p.j);
  if (fi == features.end() || fj == features.end()) {
    throw Error(ErrorCode::kMissingVideo, "no features for pair " + p.i + "|" + p.j);
  }
  if (fi->second.size() != fj->second.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature dims differ");
  }
  std::vector<double> d(fi->second.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = fi->second[k] - fj->second[k];
  return d;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

double LinearRanker::score(std::span<const double> x) const {
  if (x.size() != weights.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "ranker dim mismatch");
  }
  return dot(weights, x);
}

std::vector<double> video_feature(const FeatureSequence& seq) {
  std::vector<double> mean(seq.dim(), 0.0);
  for (std::size_t r = 0; r < seq.rows(); ++r) {
    const auto row = seq.row(r);
    for (std::size_t d = 0; d < seq.dim(); ++d) mean[d] += row[d];
  }
  for (auto& m : mean) m /= static_cast<double>(seq.rows());
  return mean;
}

VideoFeatures video_features(const TaskDataset& dataset, Modality modality) {
  VideoFeatures out;
  for (const auto& v : dataset.videos) {
    out.emplace(v, video_feature(dataset.sequence(v, modality)));
  }
  return out;
}

double ranksvm_objective(const LinearRanker& ranker, const VideoFeatures& features,
                         std::span<const PairLabel> psi) {
  double hinge = 0.0;
  for (const auto& p : psi) {
    hinge += std::max(0.0, 1.0 - dot(ranker.weights, difference(features, canonicalize(p))));
  }
  return 0.5 * dot(ranker.weights, ranker.weights) + ranker.c * hinge;
}

LinearRanker ranksvm_train(const VideoFeatures& features,
                           std::span<const PairLabel> psi,
                           const RankSvmOptions& options) {
  if (psi.empty()) throw Error(ErrorCode::kTraining, "RankSVM needs consistent pairs");
  if (!(options.c > 0.0)) throw Error(ErrorCode::kConfiguration, "C must be > 0");

  std::vector<std::vector<double>> diffs;
  diffs.reserve(psi.size());
  for (const auto& p : psi) diffs.push_back(difference(features, canonicalize(p)));
  const std::size_t dim = diffs.front().size();

  // Equivalent scaled objective lambda/2 |w|^2 + mean hinge, lambda = 1/(C n).
  const double lambda = 1.0 / (options.c * static_cast<double>(diffs.size()));
  const double radius = 1.0 / std::sqrt(lambda);

  LinearRanker current{std::vector<double>(dim, 0.0), options.c};
  LinearRanker best = current;
  double best_obj = ranksvm_objective(best, features, psi);

  Rng rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, diffs.size() - 1);
  for (std::size_t t = 1; t <= options.steps; ++t) {
    const auto& d = diffs[pick(rng)];
    const double eta = 1.0 / (lambda * static_cast<double>(t));
    const bool active = dot(current.weights, d) < 1.0;
    const double shrink = 1.0 - 1.0 / static_cast<double>(t);
    for (std::size_t k = 0; k < dim; ++k) {
      current.weights[k] *= shrink;
      if (active) current.weights[k] += eta * d[k];
    }
    const double norm = std::sqrt(dot(current.weights, current.weights));
    if (norm > radius) {
      for (auto& w : current.weights) w *= radius / norm;
    }
    if (t % 100 == 0 || t == options.steps) {
      const double obj = ranksvm_objective(current, features, psi);
      if (obj < best_obj) {
        best_obj = obj;
        best = current;
      }
    }
  }
  return best;
}

SkillRanking ranksvm_score(const BaselineModel& model,
                           const std::map<Modality, VideoFeatures>& features,
                           std::span<const std::string> videos, double alpha,
                           const std::string& task_id) {
  auto stream_score = [&](const std::optional<LinearRanker>& ranker, Modality mod,
                          const std::string& video) -> std::optional<double> {
    if (!ranker) return std::nullopt;
    auto fm = features.find(mod);
    if (fm == features.end()) {
      throw Error(ErrorCode::kMissingModality,
                  "no " + std::string(modality_name(mod)) + " features");
    }
    auto fv = fm->second.find(video);
    if (fv == fm->second.end()) {
      throw Error(ErrorCode::kMissingModality,
                  "video '" + video + "' lacks " + std::string(modality_name(mod)) +
                      " features");
    }
    return ranker->score(fv->second);
  };
  std::map<std::string, double> scores;
  for (const auto& v : videos) {
    StreamScores s{stream_score(model.spatial, Modality::kSpatial, v),
                   stream_score(model.temporal, Modality::kTemporal, v)};
    scores[v] = fused_score(s, alpha);
  }
  return make_ranking(task_id, std::move(scores));
}

ParamsFile to_params_file(const LinearRanker& ranker) {
  nlohmann::json header;
  header["kind"] = "linear_ranker";
  header["input_dim"] = ranker.weights.size();
  header["c"] = ranker.c;
  ParamsFile file;
  file.header_json = header.dump();
  for (double w : ranker.weights) file.values.push_back(static_cast<float>(w));
  return file;
}

LinearRanker ranker_from_params_file(const ParamsFile& file) {
  LinearRanker r;
  try {
    const auto header = nlohmann::json::parse(file.header_json);
    if (header.at("kind").get<std::string>() != "linear_ranker") {
      throw Error(ErrorCode::kArchitecture, "params file does not hold a ranker");
    }
    if (header.at("input_dim").get<std::size_t>() != file.values.size()) {
      throw Error(ErrorCode::kArchitecture, "ranker dim mismatch");
    }
    r.c = header.at("c").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedHeader, std::string("ranker header: ") + e.what());
  }
  r.weights.assign(file.values.begin(), file.values.end());
  return r;
}

CrossValidationReport ranksvm_cross_validate(const TaskDataset& dataset,
                                             const PairSets& pairs,
                                             const BaselineConfig& cfg) {
  const auto folds =
      make_folds(dataset.videos, cfg.folds, derive_seed(cfg.seed, "folds"));
  std::map<Modality, VideoFeatures> features;
  for (auto mod : dataset.modalities) features[mod] = video_features(dataset, mod);
  std::optional<PairGraph> graph;
  {
    PairGraph g = build_pair_graph(pairs.psi);
    if (is_acyclic(g)) graph = std::move(g);
  }

  CrossValidationReport report;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const FoldSplit split = split_pairs_for_fold(pairs, folds[f]);
    if (split.train.psi.empty() || split.test.psi.empty()) {
      throw Error(ErrorCode::kOrchestration,
                  "fold " + std::to_string(f) + " lacks training or test pairs");
    }
    BaselineModel model;
    for (auto mod : dataset.modalities) {
      RankSvmOptions opts = cfg.svm;
      opts.seed = derive_seed(cfg.seed, {"ranksvm", std::to_string(f), modality_name(mod)});
      (mod == Modality::kSpatial ? model.spatial : model.temporal) =
          ranksvm_train(features.at(mod), split.train.psi, opts);
    }
    std::set<std::string> vids;
    for (const auto& p : split.test.psi) {
      vids.insert(p.i);
      vids.insert(p.j);
    }
    const std::vector<std::string> videos(vids.begin(), vids.end());
    const auto ranking = ranksvm_score(model, features, videos, cfg.alpha, dataset.task_id);

    FoldReport fr;
    fr.fold = f;
    fr.test_videos = folds[f];
    fr.train_psi = split.train.psi.size();
    fr.train_phi = split.train.phi.size();
    fr.test_psi = split.test.psi.size();
    fr.precision = pairwise_precision(ranking, split.test.psi);
    if (graph) fr.per_separation = separation_accuracy(*graph, ranking, split.test.psi);
    report.folds.push_back(std::move(fr));
  }
  double sum = 0.0;
  for (const auto& fr : report.folds) sum += fr.precision;
  report.mean = sum / static_cast<double>(report.folds.size());
  return report;
}

}  // namespace skillrank
