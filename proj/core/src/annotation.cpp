#include "skillrank/annotation.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "skillrank/error.hpp"
#include "skillrank/seeding.hpp"

namespace skillrank {

using json = nlohmann::json;

std::string_view choice_name(Choice choice) {
  return choice == Choice::kFirstBetter ? "i_better" : "j_better";
}

Choice parse_choice(std::string_view name) {
  if (name == "i_better") return Choice::kFirstBetter;
  if (name == "j_better") return Choice::kSecondBetter;
  throw Error(ErrorCode::kValidation,
              "choice must be i_better or j_better, got '" + std::string(name) + "'");
}

std::string judgment_to_json(const Judgment& judgment) {
  json j;
  j["hit_id"] = judgment.hit_id;
  j["worker_id"] = judgment.worker_id;
  j["i"] = judgment.i;
  j["j"] = judgment.j;
  j["choice"] = std::string(choice_name(judgment.choice));
  j["is_quality_control"] = judgment.is_quality_control;
  j["timestamp"] = judgment.timestamp;
  return j.dump();
}

Judgment judgment_from_json(std::string_view line) {
  try {
    const json j = json::parse(line);
    Judgment out;
    out.hit_id = j.at("hit_id").get<std::string>();
    out.worker_id = j.at("worker_id").get<std::string>();
    out.i = j.at("i").get<std::string>();
    out.j = j.at("j").get<std::string>();
    out.choice = parse_choice(j.at("choice").get<std::string>());
    out.is_quality_control = j.value("is_quality_control", false);
    out.timestamp = j.value("timestamp", std::string{});
    if (out.i == out.j) {
      throw Error(ErrorCode::kValidation, "judgment compares a video with itself");
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("judgment: ") + e.what());
  }
}

std::vector<Judgment> parse_judgments_jsonl(std::string_view text) {
  std::vector<Judgment> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(judgment_from_json(line));
  }
  return out;
}

std::vector<Judgment> read_judgments_jsonl(const std::filesystem::path& path) {
  return parse_judgments_jsonl(read_text_file(path));
}

std::string judgments_to_jsonl(std::span<const Judgment> judgments) {
  std::string out;
  for (const auto& j : judgments) {
    out += judgment_to_json(j);
    out += '\n';
  }
  return out;
}

PairKey PairKey::of(const std::string& x, const std::string& y) {
  return x < y ? PairKey{x, y} : PairKey{y, x};
}

std::map<PairKey, ConsensusOutcome> consensus(std::span<const Judgment> judgments,
                                              int workers_per_pair) {
  std::map<PairKey, std::vector<const std::string*>> votes;
  for (const auto& j : judgments) {
    if (j.is_quality_control) continue;
    votes[PairKey::of(j.i, j.j)].push_back(&j.preferred());
  }

  std::vector<std::string> bad;
  for (const auto& [key, v] : votes) {
    if (static_cast<int>(v.size()) != workers_per_pair) {
      bad.push_back(key.a + "|" + key.b + " (" + std::to_string(v.size()) + ")");
    }
  }
  if (!bad.empty()) {
    std::string msg = "pairs without exactly " + std::to_string(workers_per_pair) +
                      " judgments:";
    for (const auto& b : bad) msg += " " + b;
    throw Error(ErrorCode::kProtocol, msg);
  }

  std::map<PairKey, ConsensusOutcome> out;
  for (const auto& [key, v] : votes) {
    const std::string& first = *v.front();
    const bool unanimous = std::all_of(
        v.begin(), v.end(), [&](const std::string* w) { return *w == first; });
    ConsensusOutcome outcome;
    if (unanimous) {
      outcome.consistent = true;
      outcome.winner = first;
      outcome.loser = first == key.a ? key.b : key.a;
    }
    out.emplace(key, std::move(outcome));
  }
  return out;
}

QcTruth qc_truth_from_pairs(std::span<const PairLabel> qc_pairs) {
  QcTruth truth;
  for (const auto& raw : qc_pairs) {
    const PairLabel p = canonicalize(raw);
    if (p.label != 1) {
      throw Error(ErrorCode::kConfiguration,
                  "quality-control pair " + p.i + "|" + p.j +
                      " needs a strict direction");
    }
    truth[PairKey::of(p.i, p.j)] = p.i;
  }
  return truth;
}

std::vector<Judgment> qc_filter(std::span<const Judgment> judgments,
                                const QcTruth& qc_truth) {
  std::set<std::string> failed;
  for (const auto& j : judgments) {
    if (!j.is_quality_control) continue;
    auto it = qc_truth.find(PairKey::of(j.i, j.j));
    if (it == qc_truth.end()) {
      throw Error(ErrorCode::kConfiguration,
                  "quality-control pair " + j.i + "|" + j.j + " has no ground truth");
    }
    if (j.preferred() != it->second) failed.insert(j.worker_id);
  }
  std::vector<Judgment> out;
  out.reserve(judgments.size());
  for (const auto& j : judgments) {
    if (!failed.count(j.worker_id)) out.push_back(j);
  }
  return out;
}

void PairGraph::add_node(const std::string& node) { out_[node]; }

void PairGraph::add_edge(const std::string& winner, const std::string& loser) {
  out_[winner].insert(loser);
  out_[loser];
}

bool PairGraph::remove_edge(const std::string& winner, const std::string& loser) {
  auto it = out_.find(winner);
  return it != out_.end() && it->second.erase(loser) > 0;
}

bool PairGraph::has_node(const std::string& node) const {
  return out_.count(node) != 0;
}

bool PairGraph::has_edge(const std::string& winner,
                         const std::string& loser) const {
  auto it = out_.find(winner);
  return it != out_.end() && it->second.count(loser) != 0;
}

std::vector<std::string> PairGraph::nodes() const {
  std::vector<std::string> out;
  out.reserve(out_.size());
  for (const auto& [node, _] : out_) out.push_back(node);
  return out;
}

std::vector<std::pair<std::string, std::string>> PairGraph::edges() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [from, succ] : out_) {
    for (const auto& to : succ) out.emplace_back(from, to);
  }
  return out;
}

std::size_t PairGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& [_, succ] : out_) n += succ.size();
  return n;
}

const std::set<std::string>& PairGraph::successors(const std::string& node) const {
  auto it = out_.find(node);
  if (it == out_.end()) {
    throw Error(ErrorCode::kMissingVideo, "node '" + node + "' not in graph");
  }
  return it->second;
}

PairGraph build_pair_graph(std::span<const PairLabel> psi) {
  PairGraph g;
  for (const auto& p : psi) {
    if (p.label != 1) {
      throw Error(ErrorCode::kValidation,
                  "pair graph takes consistent pairs only (label 1)");
    }
    g.add_edge(p.i, p.j);
  }
  return g;
}

namespace {

// Integer view of a PairGraph; node index order is lexicographic.
struct IndexedGraph {
  std::vector<std::string> names;
  std::vector<std::vector<int>> out;

  explicit IndexedGraph(const PairGraph& g) : names(g.nodes()) {
    std::map<std::string, int> index;
    for (int k = 0; k < static_cast<int>(names.size()); ++k) index[names[k]] = k;
    out.resize(names.size());
    for (int k = 0; k < static_cast<int>(names.size()); ++k) {
      for (const auto& s : g.successors(names[k])) out[k].push_back(index[s]);
    }
  }

  int size() const { return static_cast<int>(names.size()); }
};

// Tarjan's strongly connected components restricted to nodes >= lower.
std::vector<int> scc_ids(const IndexedGraph& g, int lower) {
  const int n = g.size();
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  int counter = 0, ncomp = 0;

  std::function<void(int)> strongconnect = [&](int v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (int w : g.out[v]) {
      if (w < lower) continue;
      if (index[w] < 0) {
        strongconnect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      int w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = ncomp;
      } while (w != v);
      ++ncomp;
    }
  };
  for (int v = lower; v < n; ++v) {
    if (index[v] < 0) strongconnect(v);
  }
  return comp;
}

// Johnson's elementary circuit enumeration.
class CircuitFinder {
 public:
  explicit CircuitFinder(const IndexedGraph& g)
      : g_(g), blocked_(g.size(), false), blocked_by_(g.size()) {}

  std::vector<std::vector<int>> run() {
    const int n = g_.size();
    for (int s = 0; s < n; ++s) {
      const auto comp = scc_ids(g_, s);
      in_scope_.assign(n, false);
      int members = 0;
      for (int v = s; v < n; ++v) {
        if (comp[v] == comp[s]) {
          in_scope_[v] = true;
          ++members;
        }
      }
      const bool self_loop =
          std::find(g_.out[s].begin(), g_.out[s].end(), s) != g_.out[s].end();
      if (members < 2 && !self_loop) continue;
      for (int v = s; v < n; ++v) {
        blocked_[v] = false;
        blocked_by_[v].clear();
      }
      start_ = s;
      circuit(s);
    }
    return std::move(cycles_);
  }

 private:
  void unblock(int u) {
    blocked_[u] = false;
    while (!blocked_by_[u].empty()) {
      const int w = *blocked_by_[u].begin();
      blocked_by_[u].erase(blocked_by_[u].begin());
      if (blocked_[w]) unblock(w);
    }
  }

  bool circuit(int v) {
    bool found = false;
    path_.push_back(v);
    blocked_[v] = true;
    for (int w : g_.out[v]) {
      if (!in_scope_[w]) continue;
      if (w == start_) {
        cycles_.push_back(path_);
        found = true;
      } else if (!blocked_[w] && circuit(w)) {
        found = true;
      }
    }
    if (found) {
      unblock(v);
    } else {
      for (int w : g_.out[v]) {
        if (in_scope_[w]) blocked_by_[w].insert(v);
      }
    }
    path_.pop_back();
    return found;
  }

  const IndexedGraph& g_;
  std::vector<bool> blocked_;
  std::vector<std::set<int>> blocked_by_;
  std::vector<bool> in_scope_;
  std::vector<int> path_;
  std::vector<std::vector<int>> cycles_;
  int start_ = 0;
};

}  // namespace

std::vector<std::vector<std::string>> find_cycles(const PairGraph& graph) {
  const IndexedGraph g(graph);
  std::vector<std::vector<std::string>> out;
  for (const auto& cycle : CircuitFinder(g).run()) {
    std::vector<std::string> named;
    named.reserve(cycle.size());
    for (int v : cycle) named.push_back(g.names[v]);
    out.push_back(std::move(named));
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_acyclic(const PairGraph& graph) {
  const IndexedGraph g(graph);
  std::vector<int> indegree(g.size(), 0);
  for (const auto& succ : g.out) {
    for (int w : succ) ++indegree[w];
  }
  std::vector<int> ready;
  for (int v = 0; v < g.size(); ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  int visited = 0;
  while (!ready.empty()) {
    const int v = ready.back();
    ready.pop_back();
    ++visited;
    for (int w : g.out[v]) {
      if (--indegree[w] == 0) ready.push_back(w);
    }
  }
  return visited == g.size();
}

std::map<std::string, int> longest_path_ranks(const PairGraph& graph) {
  const IndexedGraph g(graph);
  std::vector<int> indegree(g.size(), 0);
  for (const auto& succ : g.out) {
    for (int w : succ) ++indegree[w];
  }
  std::vector<int> ready, rank(g.size(), 0);
  for (int v = 0; v < g.size(); ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  int visited = 0;
  while (!ready.empty()) {
    const int v = ready.back();
    ready.pop_back();
    ++visited;
    for (int w : g.out[v]) {
      rank[w] = std::max(rank[w], rank[v] + 1);
      if (--indegree[w] == 0) ready.push_back(w);
    }
  }
  if (visited != g.size()) {
    throw Error(ErrorCode::kCyclicGraph,
                "longest-path ranks need an acyclic graph");
  }
  std::map<std::string, int> out;
  for (int v = 0; v < g.size(); ++v) out[g.names[v]] = rank[v];
  return out;
}

SeparationIndex::SeparationIndex(const PairGraph& graph)
    : ranks_(longest_path_ranks(graph)) {
  const IndexedGraph g(graph);
  std::vector<int> parent(g.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (int v = 0; v < g.size(); ++v) {
    for (int w : g.out[v]) parent[find(v)] = find(w);
  }
  for (int v = 0; v < g.size(); ++v) component_[g.names[v]] = find(v);
}

std::optional<int> SeparationIndex::operator()(const std::string& i,
                                               const std::string& j) const {
  auto ci = component_.find(i);
  auto cj = component_.find(j);
  if (ci == component_.end() || cj == component_.end()) return std::nullopt;
  if (ci->second != cj->second) return std::nullopt;
  return std::abs(ranks_.at(i) - ranks_.at(j));
}

std::optional<int> separation(const PairGraph& graph, const std::string& i,
                              const std::string& j) {
  return SeparationIndex(graph)(i, j);
}

std::vector<PairLabel> similar_pairs(const PairGraph& graph,
                                     std::span<const PairKey> inconsistent) {
  const SeparationIndex sep(graph);
  std::vector<PairLabel> out;
  for (const auto& key : inconsistent) {
    const auto s = sep(key.a, key.b);
    if (s && *s <= 1) out.push_back({key.a, key.b, 0});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<PairLabel> PairSets::all() const {
  std::vector<PairLabel> out(psi);
  out.insert(out.end(), phi.begin(), phi.end());
  return out;
}

PairSets make_pair_sets(std::span<const PairLabel> pairs) {
  PairSets sets;
  std::set<PairKey> seen;
  for (const auto& raw : pairs) {
    const PairLabel p = canonicalize(raw);
    if (!seen.insert(PairKey::of(p.i, p.j)).second) {
      throw Error(ErrorCode::kValidation,
                  "pair " + p.i + "|" + p.j + " appears more than once");
    }
    (p.label == 1 ? sets.psi : sets.phi).push_back(p);
  }
  return sets;
}

PairSets pairs_from_scores(const std::map<std::string, double>& scores) {
  PairSets sets;
  for (auto a = scores.begin(); a != scores.end(); ++a) {
    for (auto b = std::next(a); b != scores.end(); ++b) {
      if (a->second > b->second) {
        sets.psi.push_back({a->first, b->first, 1});
      } else if (b->second > a->second) {
        sets.psi.push_back({b->first, a->first, 1});
      } else {
        sets.phi.push_back({a->first, b->first, 0});
      }
    }
  }
  return sets;
}

std::vector<std::vector<std::string>> make_folds(std::vector<std::string> videos,
                                                 int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kConfiguration, "fold count must be >= 2");
  if (videos.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::kConfiguration,
                "need at least as many videos as folds");
  }
  std::sort(videos.begin(), videos.end());
  if (std::adjacent_find(videos.begin(), videos.end()) != videos.end()) {
    throw Error(ErrorCode::kDuplicateVideo, "duplicate video in fold input");
  }
  Rng rng(seed);
  std::shuffle(videos.begin(), videos.end(), rng);
  std::vector<std::vector<std::string>> folds(k);
  for (std::size_t t = 0; t < videos.size(); ++t) {
    folds[t % k].push_back(videos[t]);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

FoldSplit split_pairs_for_fold(const PairSets& pairs,
                               std::span<const std::string> test_fold) {
  const std::set<std::string> held_out(test_fold.begin(), test_fold.end());
  auto in_train = [&](const PairLabel& p) {
    return !held_out.count(p.i) && !held_out.count(p.j);
  };
  FoldSplit split;
  for (const auto& p : pairs.psi) {
    (in_train(p) ? split.train.psi : split.test.psi).push_back(p);
  }
  for (const auto& p : pairs.phi) {
    (in_train(p) ? split.train.phi : split.test.phi).push_back(p);
  }
  return split;
}

std::vector<std::pair<std::string, std::string>> parse_edge_list(
    std::string_view json_text) {
  std::vector<std::pair<std::string, std::string>> out;
  try {
    const json doc = json::parse(json_text);
    if (!doc.is_array()) {
      throw Error(ErrorCode::kConfiguration, "edge list must be a JSON array");
    }
    for (const auto& e : doc) {
      out.emplace_back(e.at("winner").get<std::string>(),
                       e.at("loser").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("edge list: ") + e.what());
  }
  return out;
}

std::string format_cycle(std::span<const std::string> cycle) {
  std::string out;
  for (const auto& node : cycle) out += node + " -> ";
  if (!cycle.empty()) out += cycle.front();
  return out;
}

AnnotationResult process_judgments(
    std::span<const Judgment> judgments, const QcTruth& qc_truth,
    int workers_per_pair,
    std::span<const std::pair<std::string, std::string>> drop_edges) {
  AnnotationResult result;
  result.judgments_in = judgments.size();
  const auto kept = qc_filter(judgments, qc_truth);
  result.judgments_kept = kept.size();

  const auto outcomes = consensus(kept, workers_per_pair);
  std::set<std::pair<std::string, std::string>> to_drop(drop_edges.begin(),
                                                        drop_edges.end());
  std::vector<PairLabel> psi;
  for (const auto& [key, outcome] : outcomes) {
    if (!outcome.consistent) {
      result.inconsistent.push_back(key);
      continue;
    }
    PairLabel p{outcome.winner, outcome.loser, 1};
    if (to_drop.erase({p.i, p.j})) {
      result.dropped.push_back(p);
    } else {
      psi.push_back(std::move(p));
    }
  }
  if (!to_drop.empty()) {
    const auto& e = *to_drop.begin();
    throw Error(ErrorCode::kConfiguration, "resolution edge " + e.first + " -> " +
                                               e.second +
                                               " is not a consistent pair");
  }

  const PairGraph graph = build_pair_graph(psi);
  const auto cycles = find_cycles(graph);
  if (!cycles.empty()) {
    std::string msg = "pair graph has " + std::to_string(cycles.size()) +
                      " cycle(s):";
    for (const auto& c : cycles) msg += " [" + format_cycle(c) + "]";
    throw Error(ErrorCode::kCyclicGraph, msg);
  }
  result.sets.phi = similar_pairs(graph, result.inconsistent);
  result.sets.psi = std::move(psi);
  return result;
}

}  // namespace skillrank
