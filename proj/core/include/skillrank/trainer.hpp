#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skillrank/annotation.hpp"
#include "skillrank/datastore.hpp"
#include "skillrank/losses.hpp"
#include "skillrank/scorer.hpp"

namespace skillrank {

enum class LossVariant { kRank1, kRank2, kRank3 };

std::string_view loss_variant_name(LossVariant variant);
LossVariant parse_loss_variant(std::string_view name);

// Piecewise-constant learning rate: each step's rate applies from its
// iteration until the next step's.
struct LrStep {
  std::size_t iteration = 0;
  double rate = 0.0;

  friend bool operator==(const LrStep&, const LrStep&) = default;
};
using LrSchedule = std::vector<LrStep>;

// Iterations before the first threshold use the first-listed rate.
double lr_at(const LrSchedule& schedule, std::size_t iteration);

// Published fine-tuning schedules: spatial 1e-3, /10 every 1.5K, ending at
// 3.5K; temporal 5e-3, /10 at 10K and 16K, ending at 18K.
LrSchedule published_schedule(Modality modality);
std::size_t published_iterations(Modality modality);

// Scales thresholds and iteration budgets by 1/divisor (default 10).
LrSchedule scaled_schedule(const LrSchedule& schedule, std::size_t divisor);

struct TrainConfig {
  LossVariant variant = LossVariant::kRank3;
  double margin = 1.0;
  std::size_t splits = 7;
  double beta = 0.5;
  std::size_t batch_size = 128;
  double momentum = 0.9;
  LrSchedule lr_schedule = {{0, 1e-3}};
  std::size_t max_iterations = 350;
  std::uint64_t seed = 0;
  std::optional<std::vector<std::size_t>> hidden;  // nullopt: default head
  Activation activation = Activation::kRelu;
  double dropout = 0.0;

  // Desk-scale defaults for a stream: published schedule scaled down 10x.
  static TrainConfig defaults_for(Modality modality);

  std::size_t effective_splits() const {
    return variant == LossVariant::kRank1 ? 1 : splits;
  }
  void validate() const;
};

// One Siamese comparison: pair index into psi (or phi when similar) and the
// split compared.
struct PairTerm {
  std::size_t pair = 0;
  std::size_t split = 0;
  bool similar = false;
};

struct BatchResult {
  double loss = 0.0;
  Gradients grads;
  std::size_t psi_terms = 0;
  std::size_t phi_terms = 0;
};

struct TraceEntry {
  std::size_t iteration = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  ScorerParams params;
  std::vector<TraceEntry> trace;
};

// Siamese training of one stream. Both branches of every comparison are scored
// by the one ScorerParams value being trained.
class StreamTrainer {
 public:
  // Throws Error(kTraining) on empty psi and Error(kData) when a referenced
  // video lacks the modality or is too short for the split count.
  StreamTrainer(const TaskDataset& dataset, Modality modality, PairSets pairs,
                TrainConfig config);

  Architecture architecture() const;

  // Loss and mean-reduced gradient of a batch. Snippet draws depend only on
  // (seed, iteration, video, split), so a batch's gradient equals the
  // appropriately weighted sum of its single-term batches.
  BatchResult evaluate_batch(const ScorerParams& params,
                             std::span<const PairTerm> terms,
                             std::size_t iteration) const;

  TrainResult run() const;
  TrainResult run(ScorerParams initial) const;

  const PairSets& pairs() const { return pairs_; }
  const TrainConfig& config() const { return config_; }

 private:
  std::vector<std::span<const float>> draw_clip(const std::string& video,
                                                std::size_t split,
                                                std::size_t iteration) const;

  const TaskDataset& dataset_;
  Modality modality_;
  PairSets pairs_;
  TrainConfig config_;
};

TrainResult train_stream(const TaskDataset& dataset, Modality modality,
                         const PairSets& pairs, const TrainConfig& config);

std::string trace_to_jsonl(std::span<const TraceEntry> trace);

}  // namespace skillrank
