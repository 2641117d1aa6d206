#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace skillrank {

struct LossConfig {
  double margin = 1.0;
  double beta = 0.5;
  std::size_t splits = 7;

  // Throws Error(kConfiguration) unless margin > 0, beta in [0, 1], splits >= 1.
  void validate() const;
};

// Value of one hinge term and its derivatives w.r.t. the two scores.
struct TermValue {
  double value = 0.0;
  double d_first = 0.0;
  double d_second = 0.0;
};

// max(0, m - si + sj). Zero subgradient at the kink.
TermValue rank_term(double si, double sj, double margin);

// max(0, |si - sj| - m). Zero subgradient at the kink and at si == sj.
TermValue sim_term(double si, double sj, double margin);

// Per-split scores of one pair: first[k] = f_k(p_i), second[k] = f_k(p_j).
struct SplitScores {
  std::vector<double> first;
  std::vector<double> second;
};

struct SplitGradients {
  std::vector<double> first;
  std::vector<double> second;
};

enum class Reduction {
  kSum,   // the objectives exactly as written
  kMean,  // each objective divided by its number of (pair, split) terms
};

struct LossResult {
  double total = 0.0;
  std::size_t terms = 0;
  std::vector<SplitGradients> grads;  // parallel to the input pairs
};

// Sum over pairs and splits of rank_term. Throws Error(kSplitMismatch) when a
// pair's two videos supply different split counts.
LossResult loss_rank2(std::span<const SplitScores> psi, double margin,
                      Reduction reduction = Reduction::kSum);

// loss_rank2 with one split per pair.
LossResult loss_rank1(std::span<const double> winner_scores,
                      std::span<const double> loser_scores, double margin,
                      Reduction reduction = Reduction::kSum);

// Sum over similar pairs and splits of sim_term.
LossResult loss_sim(std::span<const SplitScores> phi, double margin,
                    Reduction reduction = Reduction::kSum);

struct Rank3Result {
  double total = 0.0;
  LossResult rank;  // gradients already scaled by beta
  LossResult sim;   // gradients already scaled by (1 - beta)
};

// beta * L_rank2 + (1 - beta) * L_sim. A component whose weight is exactly
// zero is skipped, so beta == 1 reproduces loss_rank2 bit for bit.
Rank3Result loss_rank3(std::span<const SplitScores> psi,
                       std::span<const SplitScores> phi, double beta,
                       double margin, Reduction reduction = Reduction::kSum);

}  // namespace skillrank
