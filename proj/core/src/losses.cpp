#include "skillrank/losses.hpp"

#include <cmath>
#include <string>

#include "skillrank/error.hpp"

namespace skillrank {
namespace {

template <class Term>
LossResult accumulate(std::span<const SplitScores> pairs, double margin,
                      Reduction reduction, Term term) {
  LossResult out;
  out.grads.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (p.first.size() != p.second.size()) {
      throw Error(ErrorCode::kSplitMismatch,
                  "paired videos supply " + std::to_string(p.first.size()) +
                      " and " + std::to_string(p.second.size()) + " split scores");
    }
    SplitGradients g{std::vector<double>(p.first.size()),
                     std::vector<double>(p.second.size())};
    for (std::size_t k = 0; k < p.first.size(); ++k) {
      const TermValue t = term(p.first[k], p.second[k], margin);
      out.total += t.value;
      g.first[k] = t.d_first;
      g.second[k] = t.d_second;
    }
    out.terms += p.first.size();
    out.grads.push_back(std::move(g));
  }
  if (reduction == Reduction::kMean && out.terms > 0) {
    const double inv = 1.0 / static_cast<double>(out.terms);
    out.total *= inv;
    for (auto& g : out.grads) {
      for (auto& d : g.first) d *= inv;
      for (auto& d : g.second) d *= inv;
    }
  }
  return out;
}

void scale(LossResult& r, double factor) {
  for (auto& g : r.grads) {
    for (auto& d : g.first) d *= factor;
    for (auto& d : g.second) d *= factor;
  }
}

}  // namespace

void LossConfig::validate() const {
  if (!(margin > 0.0)) throw Error(ErrorCode::kConfiguration, "margin must be > 0");
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw Error(ErrorCode::kConfiguration, "beta must lie in [0, 1]");
  }
  if (splits == 0) throw Error(ErrorCode::kConfiguration, "splits must be >= 1");
}

TermValue rank_term(double si, double sj, double margin) {
  const double violation = margin - si + sj;
  if (violation > 0.0) return {violation, -1.0, 1.0};
  return {};
}

TermValue sim_term(double si, double sj, double margin) {
  const double gap = si - sj;
  const double excess = std::abs(gap) - margin;
  if (excess > 0.0) {
    const double sign = gap > 0.0 ? 1.0 : -1.0;
    return {excess, sign, -sign};
  }
  return {};
}

LossResult loss_rank2(std::span<const SplitScores> psi, double margin,
                      Reduction reduction) {
  return accumulate(psi, margin, reduction, rank_term);
}

LossResult loss_rank1(std::span<const double> winner_scores,
                      std::span<const double> loser_scores, double margin,
                      Reduction reduction) {
  if (winner_scores.size() != loser_scores.size()) {
    throw Error(ErrorCode::kSplitMismatch, "winner/loser score counts differ");
  }
  std::vector<SplitScores> pairs;
  pairs.reserve(winner_scores.size());
  for (std::size_t k = 0; k < winner_scores.size(); ++k) {
    pairs.push_back({{winner_scores[k]}, {loser_scores[k]}});
  }
  return loss_rank2(pairs, margin, reduction);
}

LossResult loss_sim(std::span<const SplitScores> phi, double margin,
                    Reduction reduction) {
  return accumulate(phi, margin, reduction, sim_term);
}

Rank3Result loss_rank3(std::span<const SplitScores> psi,
                       std::span<const SplitScores> phi, double beta,
                       double margin, Reduction reduction) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw Error(ErrorCode::kConfiguration, "beta must lie in [0, 1]");
  }
  Rank3Result out;
  out.rank = loss_rank2(psi, margin, reduction);
  out.sim = loss_sim(phi, margin, reduction);
  if (beta == 1.0) {
    out.total = out.rank.total;
    scale(out.sim, 0.0);
    return out;
  }
  if (beta == 0.0) {
    out.total = out.sim.total;
    scale(out.rank, 0.0);
    return out;
  }
  out.total = beta * out.rank.total + (1.0 - beta) * out.sim.total;
  scale(out.rank, beta);
  scale(out.sim, 1.0 - beta);
  return out;
}

}  // namespace skillrank
