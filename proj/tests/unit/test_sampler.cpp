#include <numeric>
#include <set>

#include "skillrank/sampler.hpp"
#include "test_support.hpp"

using namespace skillrank;

namespace {

std::vector<std::size_t> sizes(const std::vector<RowRange>& ranges) {
  std::vector<std::size_t> out;
  for (const auto& r : ranges) out.push_back(r.size());
  return out;
}

}  // namespace

TEST_CASE("uniform_splits: 70 rows into 7 splits of 10") {
  CHECK(sizes(uniform_splits(70, 7)) == std::vector<std::size_t>(7, 10));
}

TEST_CASE("uniform_splits: 75 rows put the remainder first") {
  const auto s = uniform_splits(75, 7);
  CHECK(sizes(s) == std::vector<std::size_t>{11, 11, 11, 11, 11, 10, 10});
  for (std::size_t k = 0; k < s.size(); ++k) {
    const auto plan = plan_split("v", 75, 7, k);
    CHECK(plan.split == s[k]);
    CHECK(plan.segments[0].begin == s[k].begin);
    CHECK(plan.segments[2].end == s[k].end);
    for (int g = 0; g < 2; ++g) CHECK(plan.segments[g].end == plan.segments[g + 1].begin);
  }
}

TEST_CASE("uniform_splits: 20 rows cannot hold 7 splits") {
  try {
    uniform_splits(20, 7);
    FAIL("expected sampling error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSampling);
    CHECK(std::string(e.what()).find("21") != std::string::npos);
  }
}

TEST_CASE("segments of every split tile [0, length) exactly") {
  for (std::size_t length = 3; length <= 60; ++length) {
    for (std::size_t n = 1; 3 * n <= length; ++n) {
      std::vector<std::size_t> rows;
      for (std::size_t k = 0; k < n; ++k) {
        for (const auto& seg : plan_split("v", length, n, k).segments) {
          CHECK(seg.size() >= 1);
          for (std::size_t r = seg.begin; r < seg.end; ++r) rows.push_back(r);
        }
      }
      std::vector<std::size_t> expected(length);
      std::iota(expected.begin(), expected.end(), std::size_t{0});
      CHECK(rows == expected);
      const auto sz = sizes(uniform_splits(length, n));
      CHECK(*std::max_element(sz.begin(), sz.end()) - *std::min_element(sz.begin(), sz.end()) <= 1);
    }
  }
}

TEST_CASE("plan_split rejects an out-of-range split index") {
  CHECK_THROWS_CODE(plan_split("v", 30, 3, 3), ErrorCode::kSampling);
}

TEST_CASE("sample_training_snippets: one-row segments are forced") {
  const auto plan = plan_split("v", 3, 1, 0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CHECK(sample_training_snippets(plan, seed) == std::array<std::size_t, 3>{0, 1, 2});
  }
}

TEST_CASE("sample_training_snippets: same seed, same rows; rows stay in segment") {
  const auto plan = plan_split("v", 75, 7, 3);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto a = sample_training_snippets(plan, seed);
    CHECK(a == sample_training_snippets(plan, seed));
    for (int g = 0; g < 3; ++g) {
      CHECK(a[g] >= plan.segments[g].begin);
      CHECK(a[g] < plan.segments[g].end);
    }
  }
}

TEST_CASE("sample_training_snippets: 10^4 draws from a 10-row segment are uniform") {
  const auto plan = plan_split("v", 30, 1, 0);
  REQUIRE(plan.segments[1].size() == 10);
  constexpr int kDraws = 10000;
  std::array<int, 10> counts{};
  for (int d = 0; d < kDraws; ++d) {
    ++counts[sample_training_snippets(plan, static_cast<std::uint64_t>(d))[1] - 10];
  }
  // Binomial(10^4, 0.1): mean 1000, sd 30.
  double chi2 = 0.0;
  for (int c : counts) {
    CHECK(std::abs(c - 1000) <= 90);
    chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
  }
  // 99.9th percentile of chi-square with 9 degrees of freedom.
  CHECK(chi2 < 27.877);
}

TEST_CASE("test_snippets: uniform 100 rows, sigma 25") {
  const auto idx = test_snippets(100, 25, SnippetMode::kUniform);
  REQUIRE(idx.size() == 25);
  for (std::size_t t = 0; t < 25; ++t) CHECK(idx[t] == 2 + 4 * t);
}

TEST_CASE("test_snippets: start and end modes") {
  CHECK(test_snippets(100, 5, SnippetMode::kStart) == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(test_snippets(100, 3, SnippetMode::kEnd) == std::vector<std::size_t>{97, 98, 99});
  CHECK(test_snippets(2, 5, SnippetMode::kEnd) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("test_snippets: 3 rows, sigma 25, uniform dedups to at most 3") {
  const auto idx = test_snippets(3, 25, SnippetMode::kUniform);
  CHECK(idx == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("test_snippets: sigma == length returns every row once") {
  for (std::size_t length = 1; length <= 80; ++length) {
    const auto idx = test_snippets(length, length, SnippetMode::kUniform);
    std::vector<std::size_t> expected(length);
    std::iota(expected.begin(), expected.end(), std::size_t{0});
    CHECK(idx == expected);
  }
}

TEST_CASE("test_snippets: random mode is distinct, sorted and seeded") {
  const auto a = test_snippets(100, 25, SnippetMode::kRandom, 9);
  CHECK(a.size() == 25);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 25);
  CHECK(a == test_snippets(100, 25, SnippetMode::kRandom, 9));
  CHECK(a != test_snippets(100, 25, SnippetMode::kRandom, 10));
  CHECK(test_snippets(7, 25, SnippetMode::kRandom, 1).size() == 7);
}

TEST_CASE("test_snippets: invalid arguments") {
  CHECK_THROWS_CODE(test_snippets(0, 5, SnippetMode::kUniform), ErrorCode::kSampling);
  CHECK_THROWS_CODE(test_snippets(5, 0, SnippetMode::kUniform), ErrorCode::kSampling);
  CHECK_THROWS_CODE(parse_snippet_mode("middle"), ErrorCode::kConfiguration);
}
