#include "skillrank/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "skillrank/error.hpp"
#include "skillrank/sampler.hpp"
#include "skillrank/seeding.hpp"

namespace skillrank {
namespace {

// Cycles through a term list in seeded-shuffled epochs, without replacement
// inside an epoch.
class TermQueue {
 public:
  TermQueue(std::vector<PairTerm> terms, std::uint64_t seed, std::string label)
      : terms_(std::move(terms)), seed_(seed), label_(std::move(label)) {}

  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  PairTerm next() {
    if (cursor_ == 0) reshuffle();
    const PairTerm t = order_[cursor_];
    if (++cursor_ == order_.size()) {
      cursor_ = 0;
      ++epoch_;
    }
    return t;
  }

 private:
  void reshuffle() {
    order_ = terms_;
    Rng rng(derive_seed(seed_, {"epoch", label_, std::to_string(epoch_)}));
    std::shuffle(order_.begin(), order_.end(), rng);
  }

  std::vector<PairTerm> terms_;
  std::vector<PairTerm> order_;
  std::uint64_t seed_;
  std::string label_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

std::vector<PairTerm> expand_terms(std::size_t pairs, std::size_t splits,
                                   bool similar) {
  std::vector<PairTerm> out;
  out.reserve(pairs * splits);
  for (std::size_t p = 0; p < pairs; ++p) {
    for (std::size_t k = 0; k < splits; ++k) out.push_back({p, k, similar});
  }
  return out;
}

void apply_momentum(ScorerParams& params, Gradients& velocity,
                    const Gradients& grads, double momentum, double lr) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& w = params.layers[l].weights;
    auto& b = params.layers[l].bias;
    auto& vw = velocity.layers[l].weights;
    auto& vb = velocity.layers[l].bias;
    const auto& gw = grads.layers[l].weights;
    const auto& gb = grads.layers[l].bias;
    for (std::size_t k = 0; k < w.size(); ++k) {
      vw[k] = momentum * vw[k] - lr * gw[k];
      w[k] += vw[k];
    }
    for (std::size_t k = 0; k < b.size(); ++k) {
      vb[k] = momentum * vb[k] - lr * gb[k];
      b[k] += vb[k];
    }
  }
}

}  // namespace

std::string_view loss_variant_name(LossVariant variant) {
  switch (variant) {
    case LossVariant::kRank1: return "rank1";
    case LossVariant::kRank2: return "rank2";
    case LossVariant::kRank3: return "rank3";
  }
  return "rank3";
}

LossVariant parse_loss_variant(std::string_view name) {
  if (name == "rank1") return LossVariant::kRank1;
  if (name == "rank2") return LossVariant::kRank2;
  if (name == "rank3") return LossVariant::kRank3;
  throw Error(ErrorCode::kConfiguration, "unknown loss '" + std::string(name) + "'");
}

double lr_at(const LrSchedule& schedule, std::size_t iteration) {
  if (schedule.empty()) {
    throw Error(ErrorCode::kConfiguration, "learning-rate schedule is empty");
  }
  double rate = schedule.front().rate;
  for (const auto& step : schedule) {
    if (step.iteration <= iteration) rate = step.rate;
  }
  return rate;
}

LrSchedule published_schedule(Modality modality) {
  if (modality == Modality::kSpatial) {
    return {{0, 1e-3}, {1500, 1e-4}, {3000, 1e-5}};
  }
  return {{0, 5e-3}, {10000, 5e-4}, {16000, 5e-5}};
}

std::size_t published_iterations(Modality modality) {
  return modality == Modality::kSpatial ? 3500 : 18000;
}

LrSchedule scaled_schedule(const LrSchedule& schedule, std::size_t divisor) {
  if (divisor == 0) throw Error(ErrorCode::kConfiguration, "divisor must be > 0");
  LrSchedule out = schedule;
  for (auto& step : out) step.iteration /= divisor;
  return out;
}

TrainConfig TrainConfig::defaults_for(Modality modality) {
  TrainConfig cfg;
  cfg.lr_schedule = scaled_schedule(published_schedule(modality), 10);
  cfg.max_iterations = published_iterations(modality) / 10;
  return cfg;
}

void TrainConfig::validate() const {
  LossConfig{margin, beta, splits}.validate();
  if (batch_size == 0) throw Error(ErrorCode::kConfiguration, "batch_size must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw Error(ErrorCode::kConfiguration, "momentum must lie in [0, 1)");
  }
  if (lr_schedule.empty()) {
    throw Error(ErrorCode::kConfiguration, "learning-rate schedule is empty");
  }
  for (std::size_t k = 1; k < lr_schedule.size(); ++k) {
    if (lr_schedule[k].iteration <= lr_schedule[k - 1].iteration) {
      throw Error(ErrorCode::kConfiguration,
                  "schedule thresholds must be strictly increasing");
    }
  }
  for (const auto& step : lr_schedule) {
    if (!(step.rate >= 0.0) || !std::isfinite(step.rate)) {
      throw Error(ErrorCode::kConfiguration, "learning rates must be finite and >= 0");
    }
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw Error(ErrorCode::kConfiguration, "dropout must lie in [0, 1)");
  }
}

StreamTrainer::StreamTrainer(const TaskDataset& dataset, Modality modality,
                             PairSets pairs, TrainConfig config)
    : dataset_(dataset),
      modality_(modality),
      pairs_(std::move(pairs)),
      config_(std::move(config)) {
  config_.validate();
  if (pairs_.psi.empty()) {
    throw Error(ErrorCode::kTraining, "no consistent pairs to train on");
  }
  if (!dataset_.has_modality(modality_)) {
    throw Error(ErrorCode::kData, "dataset has no " +
                                      std::string(modality_name(modality_)) +
                                      " modality");
  }
  const std::size_t min_rows = 3 * config_.effective_splits();
  for (const auto& p : pairs_.all()) {
    for (const auto* v : {&p.i, &p.j}) {
      const FeatureSequence* seq = nullptr;
      try {
        seq = &dataset_.sequence(*v, modality_);
      } catch (const Error& e) {
        throw Error(ErrorCode::kData, e.what());
      }
      if (seq->rows() < min_rows) {
        throw Error(ErrorCode::kSampling,
                    "video '" + *v + "' has " + std::to_string(seq->rows()) +
                        " rows; minimum length is " + std::to_string(min_rows));
      }
    }
  }
}

Architecture StreamTrainer::architecture() const {
  const std::size_t dim = dataset_.dim(modality_);
  if (!config_.hidden) {
    Architecture arch = default_architecture(dim);
    arch.activation = config_.activation;
    return arch;
  }
  return Architecture{dim, *config_.hidden, config_.activation};
}

std::vector<std::span<const float>> StreamTrainer::draw_clip(
    const std::string& video, std::size_t split, std::size_t iteration) const {
  const auto& seq = dataset_.sequence(video, modality_);
  const SplitPlan plan =
      plan_split(video, seq.rows(), config_.effective_splits(), split);
  const auto rows = sample_training_snippets(
      plan, derive_seed(config_.seed, {"snippets", std::to_string(iteration), video,
                                       std::to_string(split)}));
  return {seq.row(rows[0]), seq.row(rows[1]), seq.row(rows[2])};
}

BatchResult StreamTrainer::evaluate_batch(const ScorerParams& params,
                                          std::span<const PairTerm> terms,
                                          std::size_t iteration) const {
  struct Scored {
    ClipTape first;
    ClipTape second;
  };
  std::vector<Scored> psi_tapes, phi_tapes;
  std::vector<SplitScores> psi_scores, phi_scores;

  for (const auto& term : terms) {
    const PairLabel& pair = term.similar ? pairs_.phi.at(term.pair)
                                         : pairs_.psi.at(term.pair);
    Scored s;
    for (int side = 0; side < 2; ++side) {
      const std::string& video = side == 0 ? pair.i : pair.j;
      const auto clip = draw_clip(video, term.split, iteration);
      DropoutConfig dropout;
      Rng drop_rng(derive_seed(config_.seed, {"dropout", std::to_string(iteration),
                                              video, std::to_string(term.split)}));
      if (config_.dropout > 0.0) dropout = {config_.dropout, &drop_rng};
      (side == 0 ? s.first : s.second) = forward_clip(params, clip, dropout);
    }
    SplitScores scores{{s.first.score}, {s.second.score}};
    if (term.similar) {
      phi_scores.push_back(std::move(scores));
      phi_tapes.push_back(std::move(s));
    } else {
      psi_scores.push_back(std::move(scores));
      psi_tapes.push_back(std::move(s));
    }
  }

  BatchResult out;
  out.grads = Gradients::zeros_like(params);
  out.psi_terms = psi_scores.size();
  out.phi_terms = phi_scores.size();

  auto propagate = [&](const std::vector<Scored>& tapes, const LossResult& r) {
    for (std::size_t k = 0; k < tapes.size(); ++k) {
      backward(params, tapes[k].first, r.grads[k].first[0], out.grads);
      backward(params, tapes[k].second, r.grads[k].second[0], out.grads);
    }
  };

  if (config_.variant == LossVariant::kRank3) {
    const auto r = loss_rank3(psi_scores, phi_scores, config_.beta, config_.margin,
                              Reduction::kMean);
    out.loss = r.total;
    propagate(psi_tapes, r.rank);
    propagate(phi_tapes, r.sim);
  } else {
    if (!phi_scores.empty()) {
      throw Error(ErrorCode::kTraining, "similar-pair terms need the rank3 loss");
    }
    const auto r = loss_rank2(psi_scores, config_.margin, Reduction::kMean);
    out.loss = r.total;
    propagate(psi_tapes, r);
  }
  return out;
}

TrainResult StreamTrainer::run() const {
  return run(init_params(architecture(),
                         derive_seed(config_.seed, {"init", modality_name(modality_)})));
}

TrainResult StreamTrainer::run(ScorerParams initial) const {
  if (!(initial.arch == architecture())) {
    throw Error(ErrorCode::kArchitecture, "initial params do not match the stream");
  }
  const std::size_t splits = config_.effective_splits();
  const bool use_sim = config_.variant == LossVariant::kRank3 &&
                       config_.beta < 1.0 && !pairs_.phi.empty();
  const bool use_rank = config_.variant != LossVariant::kRank3 || config_.beta > 0.0;

  TermQueue psi_queue(expand_terms(pairs_.psi.size(), splits, false),
                      config_.seed, "psi");
  TermQueue phi_queue(expand_terms(pairs_.phi.size(), splits, true), config_.seed,
                      "phi");

  // Interleave the two term kinds in proportion to their set sizes.
  std::size_t phi_per_batch = 0;
  if (use_sim && use_rank) {
    const double share = static_cast<double>(phi_queue.size()) /
                         static_cast<double>(phi_queue.size() + psi_queue.size());
    phi_per_batch = static_cast<std::size_t>(
        std::lround(share * static_cast<double>(config_.batch_size)));
    phi_per_batch = std::clamp<std::size_t>(phi_per_batch, 1,
                                            std::max<std::size_t>(1, config_.batch_size - 1));
    if (config_.batch_size == 1) phi_per_batch = 0;
  } else if (use_sim) {
    phi_per_batch = config_.batch_size;
  }
  const std::size_t psi_per_batch = config_.batch_size - phi_per_batch;

  TrainResult result;
  result.params = std::move(initial);
  Gradients velocity = Gradients::zeros_like(result.params);
  result.trace.reserve(config_.max_iterations);
  std::vector<PairTerm> batch;
  for (std::size_t it = 0; it < config_.max_iterations; ++it) {
    batch.clear();
    for (std::size_t k = 0; k < psi_per_batch; ++k) batch.push_back(psi_queue.next());
    for (std::size_t k = 0; k < phi_per_batch; ++k) batch.push_back(phi_queue.next());
    const BatchResult b = evaluate_batch(result.params, batch, it);
    const double lr = lr_at(config_.lr_schedule, it);
    apply_momentum(result.params, velocity, b.grads, config_.momentum, lr);
    result.trace.push_back({it, b.loss, lr});
  }
  return result;
}

TrainResult train_stream(const TaskDataset& dataset, Modality modality,
                         const PairSets& pairs, const TrainConfig& config) {
  return StreamTrainer(dataset, modality, pairs, config).run();
}

std::string trace_to_jsonl(std::span<const TraceEntry> trace) {
  std::string out;
  for (const auto& t : trace) {
    nlohmann::json j;
    j["iteration"] = t.iteration;
    j["loss"] = t.loss;
    j["lr"] = t.lr;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace skillrank
