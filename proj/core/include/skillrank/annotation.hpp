#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "skillrank/datastore.hpp"

namespace skillrank {

enum class Choice { kFirstBetter, kSecondBetter };

std::string_view choice_name(Choice choice);  // "i_better" / "j_better"
Choice parse_choice(std::string_view name);

// One worker's strict preference on one pair of one HIT.
struct Judgment {
  std::string hit_id;
  std::string worker_id;
  std::string i;
  std::string j;
  Choice choice = Choice::kFirstBetter;
  bool is_quality_control = false;
  std::string timestamp;  // ISO-8601, UTC

  const std::string& preferred() const {
    return choice == Choice::kFirstBetter ? i : j;
  }

  friend bool operator==(const Judgment&, const Judgment&) = default;
};

std::string judgment_to_json(const Judgment& judgment);
Judgment judgment_from_json(std::string_view line);
std::vector<Judgment> parse_judgments_jsonl(std::string_view text);
std::vector<Judgment> read_judgments_jsonl(const std::filesystem::path& path);
std::string judgments_to_jsonl(std::span<const Judgment> judgments);

// Unordered pair with its endpoints in lexicographic order.
struct PairKey {
  std::string a;
  std::string b;

  static PairKey of(const std::string& x, const std::string& y);

  friend bool operator==(const PairKey&, const PairKey&) = default;
  friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

struct ConsensusOutcome {
  bool consistent = false;
  std::string winner;  // empty when inconsistent
  std::string loser;
};

// Unanimity rule over the non-quality-control judgments. Every pair must have
// exactly workers_per_pair judgments; otherwise Error(kProtocol) lists the
// offending pairs.
std::map<PairKey, ConsensusOutcome> consensus(std::span<const Judgment> judgments,
                                              int workers_per_pair = 4);

// Known answer (the preferred video) of each quality-control pair.
using QcTruth = std::map<PairKey, std::string>;

QcTruth qc_truth_from_pairs(std::span<const PairLabel> qc_pairs);

// Drops every judgment of any worker who answered a quality-control pair
// wrongly. Throws Error(kConfiguration) for a QC pair without ground truth.
std::vector<Judgment> qc_filter(std::span<const Judgment> judgments,
                                const QcTruth& qc_truth);

// Directed winner -> loser graph over the consistent pairs.
class PairGraph {
 public:
  void add_node(const std::string& node);
  void add_edge(const std::string& winner, const std::string& loser);
  bool remove_edge(const std::string& winner, const std::string& loser);

  bool has_node(const std::string& node) const;
  bool has_edge(const std::string& winner, const std::string& loser) const;
  std::vector<std::string> nodes() const;  // sorted
  std::vector<std::pair<std::string, std::string>> edges() const;  // sorted
  std::size_t node_count() const { return out_.size(); }
  std::size_t edge_count() const;
  const std::set<std::string>& successors(const std::string& node) const;

 private:
  std::map<std::string, std::set<std::string>> out_;
};

PairGraph build_pair_graph(std::span<const PairLabel> psi);

// Every elementary cycle. Each cycle starts at its lexicographically least
// node and follows edge direction; the list is sorted.
std::vector<std::vector<std::string>> find_cycles(const PairGraph& graph);

bool is_acyclic(const PairGraph& graph);

// Length of the longest path from any in-degree-0 node to each node. Throws
// Error(kCyclicGraph) when the graph has a cycle.
std::map<std::string, int> longest_path_ranks(const PairGraph& graph);

// Precomputed ranks and weak components for repeated separation queries.
class SeparationIndex {
 public:
  explicit SeparationIndex(const PairGraph& graph);

  // |rank(i) - rank(j)|, or nullopt when either node is absent from the graph
  // or the two lie in different weakly connected components.
  std::optional<int> operator()(const std::string& i, const std::string& j) const;

  const std::map<std::string, int>& ranks() const { return ranks_; }

 private:
  std::map<std::string, int> ranks_;
  std::map<std::string, int> component_;
};

std::optional<int> separation(const PairGraph& graph, const std::string& i,
                              const std::string& j);

// Inconsistent pairs whose separation is defined and at most 1, labeled 0.
std::vector<PairLabel> similar_pairs(const PairGraph& graph,
                                     std::span<const PairKey> inconsistent);

// psi holds label-1 pairs (winner first), phi label-0 pairs.
struct PairSets {
  std::vector<PairLabel> psi;
  std::vector<PairLabel> phi;

  std::vector<PairLabel> all() const;
};

// Partitions canonical labels by value; -1 labels are canonicalized first.
// Throws Error(kValidation) when an unordered pair appears twice.
PairSets make_pair_sets(std::span<const PairLabel> pairs);

PairSets pairs_from_scores(const std::map<std::string, double>& scores);

std::vector<std::vector<std::string>> make_folds(std::vector<std::string> videos,
                                                 int k, std::uint64_t seed);

struct FoldSplit {
  PairSets train;
  PairSets test;
};

FoldSplit split_pairs_for_fold(const PairSets& pairs,
                               std::span<const std::string> test_fold);

// Cycle-resolution config: JSON list [{"winner": ..., "loser": ...}, ...].
std::vector<std::pair<std::string, std::string>> parse_edge_list(
    std::string_view json_text);

struct AnnotationResult {
  PairSets sets;
  std::vector<PairKey> inconsistent;
  std::vector<PairLabel> dropped;  // consistent pairs removed by resolution
  std::size_t judgments_in = 0;
  std::size_t judgments_kept = 0;
};

// qc_filter -> consensus -> pair graph -> cycle resolution -> similar pairs.
// Refuses (Error kCyclicGraph, cycles listed) while any cycle remains after
// dropping the configured edges.
AnnotationResult process_judgments(
    std::span<const Judgment> judgments, const QcTruth& qc_truth,
    int workers_per_pair,
    std::span<const std::pair<std::string, std::string>> drop_edges = {});

std::string format_cycle(std::span<const std::string> cycle);

}  // namespace skillrank
