#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "skillrank/annotation.hpp"
#include "skillrank/evaluator.hpp"

// Independent reference implementations. Everything here is deliberately
// naive: exhaustive enumeration over tiny inputs.
namespace oracle {

using skillrank::PairGraph;

inline std::string node_name(int k) { return std::string(1, static_cast<char>('a' + k)); }

// Random digraph on n <= 8 nodes named a, b, c, ...
inline PairGraph random_digraph(std::mt19937_64& rng, int n, double p, bool acyclic) {
  PairGraph g;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution edge(p);
  for (int k = 0; k < n; ++k) g.add_node(node_name(k));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b || !edge(rng)) continue;
      if (acyclic) {
        const auto pa = std::find(order.begin(), order.end(), a) - order.begin();
        const auto pb = std::find(order.begin(), order.end(), b) - order.begin();
        if (pa > pb) continue;
      }
      g.add_edge(node_name(a), node_name(b));
    }
  }
  return g;
}

// Every elementary cycle, found by trying every ordering of every node subset.
inline std::vector<std::vector<std::string>> all_cycles(const PairGraph& g) {
  const auto nodes = g.nodes();
  const int n = static_cast<int>(nodes.size());
  std::set<std::vector<std::string>> found;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> members;
    for (int k = 0; k < n; ++k) {
      if (mask & (1u << k)) members.push_back(k);
    }
    // members[0] is the least node; permute the rest.
    std::vector<int> rest(members.begin() + 1, members.end());
    do {
      std::vector<std::string> cycle = {nodes[members[0]]};
      for (int k : rest) cycle.push_back(nodes[k]);
      bool closed = true;
      for (std::size_t k = 0; k < cycle.size() && closed; ++k) {
        closed = g.has_edge(cycle[k], cycle[(k + 1) % cycle.size()]);
      }
      if (closed) found.insert(cycle);
    } while (std::next_permutation(rest.begin(), rest.end()));
  }
  return {found.begin(), found.end()};
}

// Longest walk from any in-degree-0 node, by enumerating every path.
inline std::map<std::string, int> longest_walk_ranks(const PairGraph& g) {
  std::map<std::string, int> indegree;
  for (const auto& v : g.nodes()) indegree[v];
  for (const auto& [a, b] : g.edges()) ++indegree[b];
  std::map<std::string, int> rank;
  std::vector<std::string> stack;
  auto walk = [&](auto&& self, const std::string& v, int depth) -> void {
    rank[v] = std::max(rank.count(v) ? rank[v] : 0, depth);
    for (const auto& w : g.successors(v)) self(self, w, depth + 1);
  };
  for (const auto& [v, deg] : indegree) {
    if (deg == 0) walk(walk, v, 0);
  }
  return rank;
}

inline bool weakly_connected(const PairGraph& g, const std::string& a, const std::string& b) {
  std::set<std::string> seen = {a};
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& [x, y] : g.edges()) {
      if (seen.count(x) != seen.count(y)) {
        seen.insert(x);
        seen.insert(y);
        grew = true;
      }
    }
  }
  return seen.count(b) > 0;
}

inline std::optional<int> separation(const PairGraph& g, const std::string& a,
                                     const std::string& b) {
  if (!g.has_node(a) || !g.has_node(b) || !weakly_connected(g, a, b)) return std::nullopt;
  const auto ranks = longest_walk_ranks(g);
  return std::abs(ranks.at(a) - ranks.at(b));
}

// Fraction of label-1 pairs whose first video scores strictly higher.
inline double precision(const std::map<std::string, double>& scores,
                        const std::vector<skillrank::PairLabel>& truth) {
  std::size_t good = 0;
  std::size_t total = 0;
  for (const auto& p : truth) {
    if (p.label == 0) continue;
    const auto& hi = p.label == 1 ? p.i : p.j;
    const auto& lo = p.label == 1 ? p.j : p.i;
    ++total;
    if (scores.at(hi) > scores.at(lo)) ++good;
  }
  return static_cast<double>(good) / static_cast<double>(total);
}

// Average ranks (1-based) by counting, then the textbook Pearson formula.
inline std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    double less = 0.0;
    double equal = 0.0;
    for (double y : x) {
      if (y < x[k]) less += 1.0;
      if (y == x[k]) equal += 1.0;
    }
    r[k] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(average_ranks(x), average_ranks(y));
}

}  // namespace oracle
