#include "skillrank/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "skillrank/error.hpp"
#include "skillrank/seeding.hpp"

namespace skillrank {

using json = nlohmann::json;

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t start = 0;
  while (start < idx.size()) {
    std::size_t end = start + 1;
    while (end < idx.size() && v[idx[end]] == v[idx[start]]) ++end;
    const double avg = (static_cast<double>(start + end - 1)) / 2.0 + 1.0;
    for (std::size_t k = start; k < end; ++k) ranks[idx[k]] = avg;
    start = end;
  }
  return ranks;
}

std::map<std::string, StreamScores> score_all(const TwoStreamModel& model,
                                              const TaskDataset& dataset,
                                              std::span<const std::string> videos,
                                              std::size_t sigma, SnippetMode mode,
                                              std::uint64_t seed) {
  std::map<std::string, StreamScores> out;
  for (const auto& v : videos) {
    out.emplace(v, score_video_streams(model, dataset, v, sigma, mode, seed));
  }
  return out;
}

SkillRanking fused_ranking(const std::string& task,
                           const std::map<std::string, StreamScores>& scores,
                           double alpha) {
  std::map<std::string, double> fused;
  for (const auto& [v, s] : scores) fused[v] = fused_score(s, alpha);
  return make_ranking(task, std::move(fused));
}

std::vector<std::string> videos_of(std::span<const PairLabel> pairs) {
  std::set<std::string> out;
  for (const auto& p : pairs) {
    out.insert(p.i);
    out.insert(p.j);
  }
  return {out.begin(), out.end()};
}

}  // namespace

SkillRanking make_ranking(std::string task_id, std::map<std::string, double> scores) {
  SkillRanking r;
  r.task_id = std::move(task_id);
  r.scores = std::move(scores);
  for (const auto& [v, _] : r.scores) r.order.push_back(v);
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](const std::string& a, const std::string& b) {
                     const double sa = r.scores.at(a), sb = r.scores.at(b);
                     if (sa != sb) return sa > sb;
                     return a < b;
                   });
  return r;
}

void EvalConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kConfiguration, "alpha must lie in [0, 1]");
  }
  if (sigma == 0) throw Error(ErrorCode::kConfiguration, "sigma must be >= 1");
}

double fuse(double spatial, double temporal, double alpha) {
  return alpha * spatial + (1.0 - alpha) * temporal;
}

double score_sequence(const ScorerParams& params, const FeatureSequence& seq,
                      std::size_t sigma, SnippetMode mode, std::uint64_t seed) {
  const auto rows = test_snippets(seq.rows(), sigma, mode, seed);
  double sum = 0.0;
  for (auto r : rows) sum += score_snippet(params, seq.row(r));
  return sum / static_cast<double>(rows.size());
}

double fused_score(const StreamScores& scores, double alpha) {
  if (scores.spatial && scores.temporal) {
    return fuse(*scores.spatial, *scores.temporal, alpha);
  }
  if (scores.spatial) return *scores.spatial;
  if (scores.temporal) return *scores.temporal;
  throw Error(ErrorCode::kEvaluation, "no stream produced a score");
}

StreamScores score_video_streams(const TwoStreamModel& model,
                                 const TaskDataset& dataset,
                                 const std::string& video, std::size_t sigma,
                                 SnippetMode mode, std::uint64_t seed) {
  const std::uint64_t video_seed = derive_seed(seed, {"test-snippets", video});
  StreamScores out;
  if (model.spatial) {
    out.spatial = score_sequence(*model.spatial,
                                 dataset.sequence(video, Modality::kSpatial), sigma,
                                 mode, video_seed);
  }
  if (model.temporal) {
    out.temporal = score_sequence(*model.temporal,
                                  dataset.sequence(video, Modality::kTemporal),
                                  sigma, mode, video_seed);
  }
  return out;
}

double evaluate_video(const TwoStreamModel& model, const TaskDataset& dataset,
                      const std::string& video, const EvalConfig& cfg) {
  cfg.validate();
  return fused_score(
      score_video_streams(model, dataset, video, cfg.sigma, cfg.mode, cfg.seed),
      cfg.alpha);
}

SkillRanking rank_videos(const TwoStreamModel& model, const TaskDataset& dataset,
                         std::span<const std::string> videos, const EvalConfig& cfg) {
  cfg.validate();
  return fused_ranking(dataset.task_id,
                       score_all(model, dataset, videos, cfg.sigma, cfg.mode, cfg.seed),
                       cfg.alpha);
}

double pairwise_precision(const SkillRanking& ranking,
                          std::span<const PairLabel> truth) {
  std::size_t correct = 0, total = 0;
  for (const auto& raw : truth) {
    if (raw.label == 0) continue;
    const PairLabel p = canonicalize(raw);
    auto si = ranking.scores.find(p.i);
    auto sj = ranking.scores.find(p.j);
    if (si == ranking.scores.end() || sj == ranking.scores.end()) {
      throw Error(ErrorCode::kMissingVideo,
                  "ranking lacks video of pair " + p.i + "|" + p.j);
    }
    ++total;
    if (si->second > sj->second) ++correct;
  }
  if (total == 0) throw Error(ErrorCode::kEvaluation, "no ordered pairs to score");
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::map<int, BucketAccuracy> separation_accuracy(const PairGraph& graph,
                                                  const SkillRanking& ranking,
                                                  std::span<const PairLabel> truth) {
  const SeparationIndex sep(graph);
  std::map<int, BucketAccuracy> out;
  for (const auto& raw : truth) {
    if (raw.label == 0) continue;
    const PairLabel p = canonicalize(raw);
    const auto s = sep(p.i, p.j);
    if (!s) continue;
    auto si = ranking.scores.find(p.i);
    auto sj = ranking.scores.find(p.j);
    if (si == ranking.scores.end() || sj == ranking.scores.end()) {
      throw Error(ErrorCode::kMissingVideo,
                  "ranking lacks video of pair " + p.i + "|" + p.j);
    }
    auto& bucket = out[*s];
    ++bucket.total;
    if (si->second > sj->second) ++bucket.correct;
  }
  for (auto& [_, b] : out) {
    b.precision = static_cast<double>(b.correct) / static_cast<double>(b.total);
  }
  return out;
}

std::vector<AlphaPoint> alpha_sweep(const TwoStreamModel& model,
                                    const TaskDataset& dataset,
                                    std::span<const std::string> videos,
                                    std::span<const PairLabel> truth,
                                    std::size_t sigma, std::uint64_t seed) {
  const auto scores =
      score_all(model, dataset, videos, sigma, SnippetMode::kUniform, seed);
  std::vector<AlphaPoint> out;
  for (int k = 0; k <= 10; ++k) {
    const double alpha = static_cast<double>(k) / 10.0;
    out.push_back(
        {alpha, pairwise_precision(fused_ranking(dataset.task_id, scores, alpha), truth)});
  }
  return out;
}

std::map<SnippetMode, std::vector<CurvePoint>> snippet_curve(
    const TwoStreamModel& model, const TaskDataset& dataset,
    std::span<const std::string> videos, std::span<const PairLabel> truth,
    double alpha, std::size_t sigma_max, std::span<const SnippetMode> modes,
    std::uint64_t seed) {
  if (sigma_max == 0) throw Error(ErrorCode::kConfiguration, "sigma_max must be >= 1");
  std::map<SnippetMode, std::vector<CurvePoint>> out;
  for (auto mode : modes) {
    auto& curve = out[mode];
    const std::size_t draws = mode == SnippetMode::kRandom ? kRandomCurveDraws : 1;
    for (std::size_t sigma = 1; sigma <= sigma_max; ++sigma) {
      double sum = 0.0;
      for (std::size_t d = 0; d < draws; ++d) {
        const auto draw_seed = derive_seed(seed, {"snippet-curve", std::to_string(d)});
        const auto scores = score_all(model, dataset, videos, sigma, mode, draw_seed);
        sum += pairwise_precision(fused_ranking(dataset.task_id, scores, alpha), truth);
      }
      curve.push_back({sigma, sum / static_cast<double>(draws)});
    }
  }
  return out;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kEvaluation, "spearman_rho: length mismatch");
  }
  if (x.size() < 2) {
    throw Error(ErrorCode::kEvaluation, "spearman_rho needs at least two points");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < rx.size(); ++k) {
    sxy += (rx[k] - mx) * (ry[k] - my);
    sxx += (rx[k] - mx) * (rx[k] - mx);
    syy += (ry[k] - my) * (ry[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::kEvaluation, "spearman_rho undefined for constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double time_skill_correlation(const TaskDataset& dataset) {
  std::vector<double> times, scores;
  for (const auto& [video, score] : dataset.scores) {
    auto t = dataset.times.find(video);
    if (t != dataset.times.end()) {
      times.push_back(t->second);
    } else {
      times.push_back(static_cast<double>(
          dataset.sequence(video, dataset.modalities.front()).rows()));
    }
    scores.push_back(score);
  }
  return spearman_rho(times, scores);
}

CrossValidationReport cross_validate(const TaskDataset& dataset,
                                     const PairSets& pairs,
                                     const CrossValidationConfig& cfg) {
  cfg.eval.validate();
  const auto folds = make_folds(dataset.videos, cfg.folds,
                                derive_seed(cfg.seed, "folds"));
  std::optional<PairGraph> graph;
  {
    PairGraph g = build_pair_graph(pairs.psi);
    if (is_acyclic(g)) graph = std::move(g);
  }

  CrossValidationReport report;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const FoldSplit split = split_pairs_for_fold(pairs, folds[f]);
    if (split.train.psi.empty()) {
      throw Error(ErrorCode::kOrchestration,
                  "fold " + std::to_string(f) + " has no training pairs");
    }
    FoldReport fr;
    fr.fold = f;
    fr.test_videos = folds[f];
    fr.train_psi = split.train.psi.size();
    fr.train_phi = split.train.phi.size();
    fr.test_psi = split.test.psi.size();
    if (split.test.psi.empty()) {
      throw Error(ErrorCode::kOrchestration,
                  "fold " + std::to_string(f) + " has no test pairs");
    }

    TwoStreamModel model;
    for (auto mod : dataset.modalities) {
      TrainConfig tc = mod == Modality::kSpatial ? cfg.spatial : cfg.temporal;
      tc.seed = derive_seed(cfg.seed, {"train", std::to_string(f), modality_name(mod)});
      auto trained = train_stream(dataset, mod, split.train, tc);
      (mod == Modality::kSpatial ? model.spatial : model.temporal) =
          std::move(trained.params);
    }

    const auto videos = videos_of(split.test.psi);
    const auto ranking = rank_videos(model, dataset, videos, cfg.eval);
    fr.precision = pairwise_precision(ranking, split.test.psi);
    if (graph) fr.per_separation = separation_accuracy(*graph, ranking, split.test.psi);
    if (cfg.alpha_curve) {
      fr.alpha_curve =
          alpha_sweep(model, dataset, videos, split.test.psi, cfg.eval.sigma, cfg.eval.seed);
    }
    if (cfg.snippet_sigma_max > 0) {
      const SnippetMode modes[] = {SnippetMode::kStart, SnippetMode::kEnd,
                                   SnippetMode::kRandom};
      fr.snippet_curves = snippet_curve(model, dataset, videos, split.test.psi,
                                        cfg.eval.alpha, cfg.snippet_sigma_max, modes,
                                        cfg.eval.seed);
    }
    report.folds.push_back(std::move(fr));
  }
  double sum = 0.0;
  for (const auto& fr : report.folds) sum += fr.precision;
  report.mean = sum / static_cast<double>(report.folds.size());
  return report;
}

PairSets permute_video_labels(const PairSets& pairs,
                              std::span<const std::string> videos,
                              std::uint64_t seed) {
  std::vector<std::string> from(videos.begin(), videos.end());
  std::sort(from.begin(), from.end());
  std::vector<std::string> to = from;
  Rng rng(seed);
  std::shuffle(to.begin(), to.end(), rng);
  std::map<std::string, std::string> relabel;
  for (std::size_t k = 0; k < from.size(); ++k) relabel[from[k]] = to[k];
  auto map_pairs = [&](const std::vector<PairLabel>& in) {
    std::vector<PairLabel> out;
    out.reserve(in.size());
    for (const auto& p : in) {
      out.push_back(canonicalize({relabel.at(p.i), relabel.at(p.j), p.label}));
    }
    return out;
  };
  return {map_pairs(pairs.psi), map_pairs(pairs.phi)};
}

PairSets shuffle_pair_labels(const PairSets& pairs, std::uint64_t seed) {
  std::vector<PairLabel> lexical;
  std::vector<int> labels;
  for (const auto& raw : pairs.psi) {
    const PairLabel p = canonicalize(raw);
    if (p.i < p.j) {
      lexical.push_back({p.i, p.j, 1});
    } else {
      lexical.push_back({p.j, p.i, -1});
    }
    labels.push_back(lexical.back().label);
  }
  Rng rng(seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  PairSets out;
  out.phi = pairs.phi;
  for (std::size_t k = 0; k < lexical.size(); ++k) {
    out.psi.push_back(canonicalize({lexical[k].i, lexical[k].j, labels[k]}));
  }
  return out;
}

std::string report_to_json(const CrossValidationReport& report) {
  json doc;
  doc["folds"] = json::array();
  for (const auto& f : report.folds) {
    json jf;
    jf["fold"] = f.fold;
    jf["test_videos"] = f.test_videos;
    jf["train_psi"] = f.train_psi;
    jf["train_phi"] = f.train_phi;
    jf["test_psi"] = f.test_psi;
    jf["precision"] = f.precision;
    jf["per_separation"] = json::object();
    for (const auto& [sep, b] : f.per_separation) {
      jf["per_separation"][std::to_string(sep)] = {
          {"correct", b.correct}, {"total", b.total}, {"precision", b.precision}};
    }
    jf["alpha_curve"] = json::array();
    for (const auto& a : f.alpha_curve) {
      jf["alpha_curve"].push_back({{"alpha", a.alpha}, {"precision", a.precision}});
    }
    jf["snippet_curves"] = json::object();
    for (const auto& [mode, curve] : f.snippet_curves) {
      json jc = json::array();
      for (const auto& c : curve) {
        jc.push_back({{"sigma", c.sigma}, {"precision", c.precision}});
      }
      jf["snippet_curves"][std::string(snippet_mode_name(mode))] = std::move(jc);
    }
    doc["folds"].push_back(std::move(jf));
  }
  doc["mean"] = report.mean;
  return doc.dump(2) + "\n";
}

std::string alpha_curve_csv(const CrossValidationReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "fold,alpha,precision\n";
  for (const auto& f : report.folds) {
    for (const auto& a : f.alpha_curve) {
      out << f.fold << ',' << a.alpha << ',' << a.precision << '\n';
    }
  }
  return out.str();
}

std::string snippet_curve_csv(const CrossValidationReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "fold,mode,sigma,precision\n";
  for (const auto& f : report.folds) {
    for (const auto& [mode, curve] : f.snippet_curves) {
      for (const auto& c : curve) {
        out << f.fold << ',' << snippet_mode_name(mode) << ',' << c.sigma << ','
            << c.precision << '\n';
      }
    }
  }
  return out.str();
}

std::string separation_csv(const CrossValidationReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "fold,separation,correct,total,precision\n";
  for (const auto& f : report.folds) {
    for (const auto& [sep, b] : f.per_separation) {
      out << f.fold << ',' << sep << ',' << b.correct << ',' << b.total << ','
          << b.precision << '\n';
    }
  }
  return out.str();
}

}  // namespace skillrank
