#include <algorithm>
#include <random>

#include "skillrank/annotation.hpp"
#include "test_support.hpp"

using namespace skillrank;

namespace {

Judgment vote(const std::string& worker, const std::string& i, const std::string& j,
              bool first_better, bool qc = false, const std::string& hit = "h0") {
  return {hit, worker, i, j, first_better ? Choice::kFirstBetter : Choice::kSecondBetter, qc,
          "2026-01-01T00:00:00Z"};
}

std::vector<Judgment> votes(const std::string& i, const std::string& j, int first, int second) {
  std::vector<Judgment> out;
  int w = 0;
  for (int k = 0; k < first; ++k) out.push_back(vote("w" + std::to_string(w++), i, j, true));
  for (int k = 0; k < second; ++k) out.push_back(vote("w" + std::to_string(w++), i, j, false));
  return out;
}

PairGraph chain_abc() { return build_pair_graph(std::vector<PairLabel>{{"A", "B", 1}, {"B", "C", 1}}); }

}  // namespace

TEST_CASE("consensus: four i_better judgments are consistent") {
  const auto out = consensus(votes("A", "B", 4, 0));
  const auto& o = out.at(PairKey::of("A", "B"));
  CHECK(o.consistent);
  CHECK(o.winner == "A");
  CHECK(o.loser == "B");
}

TEST_CASE("consensus: unanimous j_better points the other way") {
  const auto& o = consensus(votes("A", "B", 0, 4)).at(PairKey::of("A", "B"));
  CHECK(o.consistent);
  CHECK(o.winner == "B");
}

TEST_CASE("consensus: a 3-1 split is inconsistent") {
  const auto& o = consensus(votes("A", "B", 3, 1)).at(PairKey::of("A", "B"));
  CHECK_FALSE(o.consistent);
  CHECK(o.winner.empty());
}

TEST_CASE("consensus: three judgments when four are required") {
  try {
    consensus(votes("A", "B", 3, 0), 4);
    FAIL("expected protocol error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kProtocol);
    CHECK(std::string(e.what()).find("A") != std::string::npos);
  }
}

TEST_CASE("consensus: judgment order never changes the outcome") {
  std::vector<Judgment> all;
  for (auto [i, j, a, b] : std::vector<std::tuple<std::string, std::string, int, int>>{
           {"A", "B", 4, 0}, {"B", "C", 2, 2}, {"C", "D", 1, 3}, {"A", "D", 0, 4}}) {
    auto v = votes(i, j, a, b);
    all.insert(all.end(), v.begin(), v.end());
  }
  // A reversed presentation of one judgment must count the same way.
  all.push_back(vote("wx", "E", "F", true));
  for (int k = 0; k < 3; ++k) all.push_back(vote("wy" + std::to_string(k), "F", "E", false));
  const auto reference = consensus(all);
  CHECK(reference.at(PairKey::of("E", "F")).consistent);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(all.begin(), all.end(), rng);
    const auto again = consensus(all);
    REQUIRE(again.size() == reference.size());
    for (const auto& [k, o] : reference) {
      CHECK(again.at(k).consistent == o.consistent);
      CHECK(again.at(k).winner == o.winner);
    }
  }
}

TEST_CASE("consensus ignores quality-control judgments") {
  auto v = votes("A", "B", 4, 0);
  v.push_back(vote("w0", "Q1", "Q2", true, true));
  CHECK(consensus(v).size() == 1);
}

TEST_CASE("qc_filter") {
  const QcTruth truth = qc_truth_from_pairs(std::vector<PairLabel>{{"Q1", "Q2", 1}});
  std::vector<Judgment> hit;
  for (const auto& w : {"good", "bad"}) {
    for (auto [i, j] : std::vector<std::pair<std::string, std::string>>{
             {"A", "B"}, {"C", "D"}, {"E", "F"}, {"G", "H"}}) {
      hit.push_back(vote(w, i, j, true));
    }
  }
  SUBCASE("correct QC answer keeps the worker's 4 task judgments") {
    auto in = hit;
    in.push_back(vote("good", "Q1", "Q2", true, true));
    in.push_back(vote("bad", "Q2", "Q1", false, true));  // same answer, reversed display
    const auto out = qc_filter(in, truth);
    CHECK(out.size() == in.size());
  }
  SUBCASE("wrong QC answer drops all 5 of that worker's judgments") {
    auto in = hit;
    in.push_back(vote("good", "Q1", "Q2", true, true));
    in.push_back(vote("bad", "Q1", "Q2", false, true));
    const auto out = qc_filter(in, truth);
    CHECK(out.size() == 5);
    CHECK(std::none_of(out.begin(), out.end(),
                       [](const Judgment& j) { return j.worker_id == "bad"; }));
  }
  SUBCASE("no QC pairs leaves the input unchanged") {
    CHECK(qc_filter(hit, truth) == hit);
  }
  SUBCASE("QC pair without ground truth") {
    auto in = hit;
    in.push_back(vote("good", "Q8", "Q9", true, true));
    CHECK_THROWS_CODE(qc_filter(in, truth), ErrorCode::kConfiguration);
  }
}

TEST_CASE("build_pair_graph") {
  SUBCASE("one pair gives one edge") {
    const auto g = build_pair_graph(std::vector<PairLabel>{{"A", "B", 1}});
    CHECK(g.has_edge("A", "B"));
    CHECK_FALSE(g.has_edge("B", "A"));
    CHECK(g.edge_count() == 1);
  }
  SUBCASE("transitive triple is acyclic with three edges") {
    const auto g = build_pair_graph(
        std::vector<PairLabel>{{"A", "B", 1}, {"B", "C", 1}, {"A", "C", 1}});
    CHECK(g.edge_count() == 3);
    CHECK(is_acyclic(g));
  }
  SUBCASE("empty set gives no edges") {
    const auto g = build_pair_graph(std::vector<PairLabel>{});
    CHECK(g.edge_count() == 0);
    CHECK(g.nodes().empty());
  }
  SUBCASE("non-unit labels are rejected") {
    CHECK_THROWS_CODE(build_pair_graph(std::vector<PairLabel>{{"A", "B", 0}}),
                      ErrorCode::kValidation);
  }
}

TEST_CASE("find_cycles") {
  PairGraph g;
  g.add_edge("A", "B");
  g.add_edge("B", "C");
  SUBCASE("triangle") {
    g.add_edge("C", "A");
    const auto cycles = find_cycles(g);
    REQUIRE(cycles.size() == 1);
    CHECK(cycles[0] == std::vector<std::string>{"A", "B", "C"});
    CHECK(format_cycle(cycles[0]) == "A -> B -> C -> A");
  }
  SUBCASE("transitive triple has none") {
    g.add_edge("A", "C");
    CHECK(find_cycles(g).empty());
    CHECK(is_acyclic(g));
  }
}

TEST_CASE("separation on chain A->B->C") {
  const auto g = chain_abc();
  CHECK(separation(g, "A", "C") == 2);
  CHECK(separation(g, "B", "C") == 1);
  CHECK(separation(g, "C", "A") == 2);
  CHECK(separation(g, "B", "B") == 0);
  CHECK_FALSE(separation(g, "A", "Z").has_value());
}

TEST_CASE("separation is undefined across weak components") {
  auto g = chain_abc();
  g.add_edge("X", "Y");
  CHECK_FALSE(separation(g, "A", "Y").has_value());
  CHECK(separation(g, "X", "Y") == 1);
}

TEST_CASE("separation on a cyclic graph is a precondition error") {
  auto g = chain_abc();
  g.add_edge("C", "A");
  CHECK_THROWS_CODE(separation(g, "A", "B"), ErrorCode::kCyclicGraph);
  CHECK_THROWS_CODE(longest_path_ranks(g), ErrorCode::kCyclicGraph);
}

TEST_CASE("similar_pairs on chain A->B->C") {
  const auto g = chain_abc();
  const std::vector<PairKey> inconsistent = {PairKey::of("B", "C"), PairKey::of("A", "C"),
                                             PairKey::of("P", "Q")};
  const auto phi = similar_pairs(g, inconsistent);
  REQUIRE(phi.size() == 1);
  CHECK(phi[0] == PairLabel{"B", "C", 0});
}

TEST_CASE("pairs_from_scores") {
  SUBCASE("distinct scores") {
    const auto s = pairs_from_scores({{"A", 25}, {"B", 20}});
    REQUIRE(s.psi.size() == 1);
    CHECK(s.psi[0] == PairLabel{"A", "B", 1});
    CHECK(s.phi.empty());
  }
  SUBCASE("tied scores") {
    const auto s = pairs_from_scores({{"A", 20}, {"B", 20}});
    CHECK(s.psi.empty());
    REQUIRE(s.phi.size() == 1);
    CHECK(s.phi[0] == PairLabel{"A", "B", 0});
  }
  SUBCASE("36 distinct scores give 630 ordered pairs") {
    std::map<std::string, double> scores;
    for (int k = 0; k < 36; ++k) scores["v" + std::to_string(k)] = k * 1.5;
    const auto s = pairs_from_scores(scores);
    CHECK(s.psi.size() == 630);
    for (const auto& p : s.psi) CHECK(scores.at(p.i) > scores.at(p.j));
  }
}

TEST_CASE("make_pair_sets") {
  const auto s = make_pair_sets(std::vector<PairLabel>{{"A", "B", -1}, {"C", "D", 0}});
  CHECK(s.psi == std::vector<PairLabel>{{"B", "A", 1}});
  CHECK(s.phi == std::vector<PairLabel>{{"C", "D", 0}});
  CHECK_THROWS_CODE(make_pair_sets(std::vector<PairLabel>{{"A", "B", 1}, {"B", "A", 0}}),
                    ErrorCode::kValidation);
}

TEST_CASE("make_folds") {
  std::vector<std::string> forty, thirty_three;
  for (int k = 0; k < 40; ++k) forty.push_back("v" + std::to_string(k));
  for (int k = 0; k < 33; ++k) thirty_three.push_back("v" + std::to_string(k));
  SUBCASE("40 videos into four folds of 10") {
    for (const auto& f : make_folds(forty, 4, 1)) CHECK(f.size() == 10);
  }
  SUBCASE("33 videos into 9,8,8,8") {
    std::vector<std::size_t> sizes;
    for (const auto& f : make_folds(thirty_three, 4, 1)) sizes.push_back(f.size());
    CHECK(sizes == std::vector<std::size_t>{9, 8, 8, 8});
  }
  SUBCASE("same seed, same folds; folds partition the videos") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto a = make_folds(thirty_three, 4, seed);
      CHECK(a == make_folds(thirty_three, 4, seed));
      std::vector<std::string> all;
      for (const auto& f : a) all.insert(all.end(), f.begin(), f.end());
      std::sort(all.begin(), all.end());
      auto expected = thirty_three;
      std::sort(expected.begin(), expected.end());
      CHECK(all == expected);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_CODE(make_folds(forty, 1, 0), ErrorCode::kConfiguration);
    CHECK_THROWS_CODE(make_folds({"a", "b"}, 3, 0), ErrorCode::kConfiguration);
  }
}

TEST_CASE("split_pairs_for_fold") {
  PairSets sets;
  sets.psi = {{"A", "B", 1}, {"A", "C", 1}};
  sets.phi = {{"B", "C", 0}};
  const std::vector<std::string> fold = {"C"};
  const auto split = split_pairs_for_fold(sets, fold);
  CHECK(split.train.psi == std::vector<PairLabel>{{"A", "B", 1}});
  CHECK(split.test.psi == std::vector<PairLabel>{{"A", "C", 1}});
  CHECK(split.test.phi.size() == 1);
  CHECK(split.train.psi.size() + split.test.psi.size() + split.train.phi.size() +
            split.test.phi.size() ==
        3);
}

TEST_CASE("judgments jsonl round trip") {
  TempDir dir("ann-jsonl");
  const std::vector<Judgment> js = {vote("w1", "A", "B", true), vote("w2", "C", "D", false, true)};
  write_text_file(dir / "j.jsonl", judgments_to_jsonl(js));
  CHECK(read_judgments_jsonl(dir / "j.jsonl") == js);
  CHECK(parse_judgments_jsonl("").empty());
  CHECK_THROWS_CODE(parse_judgments_jsonl(R"({"hit_id":"h"})"), ErrorCode::kValidation);
}

TEST_CASE("process_judgments: resolution edges unblock a cyclic graph") {
  std::vector<Judgment> js;
  for (auto [i, j] : std::vector<std::pair<std::string, std::string>>{
           {"A", "B"}, {"B", "C"}, {"C", "A"}, {"C", "D"}}) {
    auto v = votes(i, j, 4, 0);
    js.insert(js.end(), v.begin(), v.end());
  }
  auto split = votes("B", "D", 3, 1);
  js.insert(js.end(), split.begin(), split.end());
  const QcTruth none;
  CHECK_THROWS_CODE(process_judgments(js, none, 4), ErrorCode::kCyclicGraph);

  const auto drops = parse_edge_list(R"([{"winner": "C", "loser": "A"}])");
  const auto result = process_judgments(js, none, 4, drops);
  CHECK(result.sets.psi.size() == 3);
  CHECK(result.dropped == std::vector<PairLabel>{{"C", "A", 1}});
  CHECK(result.inconsistent == std::vector<PairKey>{PairKey::of("B", "D")});
  // Ranks A0 B1 C2 D3: separation(B, D) = 2, so B-D is not similar.
  CHECK(result.sets.phi.empty());

  const auto unknown = parse_edge_list(R"([{"winner": "D", "loser": "A"}])");
  CHECK_THROWS_CODE(process_judgments(js, none, 4, unknown), ErrorCode::kConfiguration);
}

TEST_CASE("process_judgments: planted 3-1 pair lands in phi") {
  std::vector<Judgment> js;
  for (auto [i, j] : std::vector<std::pair<std::string, std::string>>{{"A", "B"}, {"B", "C"}}) {
    auto v = votes(i, j, 4, 0);
    js.insert(js.end(), v.begin(), v.end());
  }
  auto disagree = votes("C", "D", 3, 1);
  auto anchor = votes("B", "D", 4, 0);
  js.insert(js.end(), disagree.begin(), disagree.end());
  js.insert(js.end(), anchor.begin(), anchor.end());
  const auto result = process_judgments(js, {}, 4);
  CHECK(result.sets.psi.size() == 3);
  // Ranks: A0 B1 C2 D2 -> separation(C, D) = 0.
  CHECK(result.sets.phi == std::vector<PairLabel>{{"C", "D", 0}});
}
