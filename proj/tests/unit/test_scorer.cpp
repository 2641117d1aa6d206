#include <cmath>
#include <random>

#include "loss_fixture.hpp"
#include "skillrank/scorer.hpp"
#include "skillrank/seeding.hpp"
#include "test_support.hpp"

using namespace skillrank;

namespace {

ScorerParams linear_params(std::vector<double> w, double b) {
  ScorerParams p = zero_params(Architecture::linear(w.size()));
  p.layers[0].weights = std::move(w);
  p.layers[0].bias = {b};
  return p;
}

}  // namespace

TEST_CASE("init_params: 64 -> 1 has 64 weights and a zero bias") {
  const auto p = init_params(Architecture::linear(64), 3);
  REQUIRE(p.layers.size() == 1);
  CHECK(p.layers[0].weights.size() == 64);
  CHECK(p.layers[0].bias == std::vector<double>{0.0});
  CHECK(p.parameter_count() == 65);
}

TEST_CASE("init_params: same seed gives identical params") {
  const Architecture arch{8, {4, 3}, Activation::kRelu};
  const auto a = init_params(arch, 42);
  const auto b = init_params(arch, 42);
  for (std::size_t k = 0; k < a.parameter_count(); ++k) CHECK(a.at(k) == b.at(k));
  CHECK(init_params(arch, 43).at(0) != a.at(0));
}

TEST_CASE("init_params: 10^4 weights are centered and bounded by 1/sqrt(fan_in)") {
  const auto p = init_params(Architecture::linear(10000), 1);
  const double bound = 1.0 / std::sqrt(10000.0);
  double sum = 0.0;
  for (double w : p.layers[0].weights) {
    CHECK(std::abs(w) <= bound);
    sum += w;
  }
  // U(-a, a) has sd a / sqrt(3); the mean of n draws has sd a / sqrt(3n).
  const double sd_mean = bound / std::sqrt(3.0 * 10000.0);
  CHECK(std::abs(sum / 10000.0) < 3.0 * sd_mean);
}

TEST_CASE("architecture errors") {
  CHECK_THROWS_CODE(zero_params(Architecture{0, {}, Activation::kRelu}), ErrorCode::kArchitecture);
  CHECK_THROWS_CODE(init_params(Architecture{4, {3, 0}, Activation::kRelu}, 0),
                    ErrorCode::kArchitecture);
}

TEST_CASE("default_architecture keeps widths below the input dim") {
  CHECK(default_architecture(4096).hidden == std::vector<std::size_t>{1000, 512, 256, 128, 64});
  CHECK(default_architecture(300).hidden == std::vector<std::size_t>{256, 128, 64});
  CHECK(default_architecture(64).hidden.empty());
}

TEST_CASE("score_snippet: linear w=(1,2), b=0.5, x=(1,1) is 3.5") {
  const auto p = linear_params({1.0, 2.0}, 0.5);
  const std::vector<float> x = {1.0f, 1.0f};
  CHECK(score_snippet(p, x) == 3.5);
}

TEST_CASE("score_snippet: zero params score zero; identical inputs identical scores") {
  const auto zero = zero_params(Architecture{5, {3}, Activation::kTanh});
  const std::vector<float> x = {1, -2, 3, 4, 5};
  CHECK(score_snippet(zero, x) == 0.0);
  const auto p = init_params(Architecture{5, {3}, Activation::kTanh}, 9);
  const std::vector<float> y = x;
  CHECK(score_snippet(p, x) == score_snippet(p, y));
}

TEST_CASE("score_snippet: wrong dimension") {
  const auto p = linear_params({1.0, 2.0}, 0.0);
  const std::vector<float> x = {1.0f};
  CHECK_THROWS_CODE(score_snippet(p, x), ErrorCode::kDimensionMismatch);
}

TEST_CASE("score_clip is the mean of snippet scores and permutation-invariant") {
  const auto p = linear_params({1.0}, 0.0);
  const std::vector<float> a = {1}, b = {2}, c = {3};
  std::vector<std::span<const float>> clip = {a, b, c};
  CHECK(score_clip(p, clip) == 2.0);
  std::vector<std::span<const float>> permuted = {c, a, b};
  CHECK(score_clip(p, permuted) == 2.0);
  std::vector<std::span<const float>> same = {b, b, b};
  CHECK(score_clip(p, same) == score_snippet(p, b));
}

TEST_CASE("positive head scaling preserves ranking") {
  std::mt19937_64 rng(4);
  auto p = init_params(Architecture{6, {5}, Activation::kRelu}, 4);
  std::vector<std::vector<float>> xs;
  for (int k = 0; k < 20; ++k) xs.push_back(fixture::random_clip(rng, 6, 1)[0]);
  std::vector<double> before;
  for (const auto& x : xs) before.push_back(score_snippet(p, x));
  for (auto& w : p.layers.back().weights) w *= 2.5;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    CHECK(score_snippet(p, xs[k]) == doctest::Approx(2.5 * before[k]).epsilon(1e-12));
  }
}

TEST_CASE("backward: linear one-snippet clip gives dw = x, db = 1") {
  const auto p = linear_params({0.3, -0.7, 1.1}, 0.2);
  const std::vector<float> x = {2, -1, 0.5};
  std::vector<std::span<const float>> clip = {x};
  const auto tape = forward_clip(p, clip);
  auto g = Gradients::zeros_like(p);
  backward(p, tape, 1.0, g);
  for (int k = 0; k < 3; ++k) CHECK(g.layers[0].weights[k] == doctest::Approx(x[k]));
  CHECK(g.layers[0].bias[0] == 1.0);
}

TEST_CASE("backward: three-snippet clip averages inputs; upstream 0 gives zeros") {
  const auto p = linear_params({1.0, 1.0}, 0.0);
  const std::vector<float> a = {3, 0}, b = {0, 3}, c = {3, 3};
  std::vector<std::span<const float>> clip = {a, b, c};
  const auto tape = forward_clip(p, clip);
  auto g = Gradients::zeros_like(p);
  backward(p, tape, 1.0, g);
  CHECK(g.layers[0].weights[0] == doctest::Approx(2.0));
  CHECK(g.layers[0].bias[0] == doctest::Approx(1.0));
  auto zero = Gradients::zeros_like(p);
  backward(p, tape, 0.0, zero);
  for (std::size_t k = 0; k < zero.parameter_count(); ++k) CHECK(zero.at(k) == 0.0);
}

TEST_CASE("backward accumulates additively across clips") {
  std::mt19937_64 rng(8);
  const auto p = init_params(Architecture{5, {4}, Activation::kRelu}, 8);
  const auto c1 = fixture::random_clip(rng, 5);
  const auto c2 = fixture::random_clip(rng, 5);
  const auto v1 = fixture::views(c1), v2 = fixture::views(c2);
  const auto t1 = forward_clip(p, v1), t2 = forward_clip(p, v2);
  auto both = Gradients::zeros_like(p), g1 = Gradients::zeros_like(p), g2 = Gradients::zeros_like(p);
  backward(p, t1, 0.7, both);
  backward(p, t2, -1.3, both);
  backward(p, t1, 0.7, g1);
  backward(p, t2, -1.3, g2);
  g1 += g2;
  for (std::size_t k = 0; k < both.parameter_count(); ++k) {
    CHECK(both.at(k) == doctest::Approx(g1.at(k)).epsilon(1e-14));
  }
}

TEST_CASE("backward: MLP 8->4->1 with tanh matches finite differences") {
  std::mt19937_64 rng(21);
  const auto p = init_params(Architecture{8, {4}, Activation::kTanh}, 21);
  const auto clip = fixture::random_clip(rng, 8);
  const LossClosure score = [&](const ScorerParams& q, Gradients* g) {
    const auto v = fixture::views(clip);
    const auto tape = forward_clip(q, v);
    if (g) backward(q, tape, 1.0, *g);
    return tape.score;
  };
  CHECK(gradient_check(p, score) < 1e-4);
}

TEST_CASE("gradient_check: linear scorer with rank1 away from the kink") {
  std::mt19937_64 rng(2);
  const auto batch = fixture::random_batch(rng, 6, 8, 0, 1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = init_params(Architecture::linear(6), seed);
    if (fixture::kink_distance(p, batch, fixture::Objective::kRank1, 1.0) < 1e-3) continue;
    CHECK(gradient_check(p, fixture::closure(batch, fixture::Objective::kRank1, 0.5, 1.0)) < 1e-6);
  }
}

TEST_CASE("gradient_check: MLP with rank3 away from kinks") {
  std::mt19937_64 rng(3);
  const auto batch = fixture::random_batch(rng, 6, 4, 3, 3);
  const Architecture arch{6, {5, 3}, Activation::kRelu};
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 20 && checked < 5; ++seed) {
    auto p = init_params(arch, seed);
    // Scale the head up so that some similarity terms are active.
    for (auto& w : p.layers.back().weights) w *= 4.0;
    if (fixture::kink_distance(p, batch, fixture::Objective::kRank3, 1.0) < 1e-4) continue;
    ++checked;
    CHECK(gradient_check(p, fixture::closure(batch, fixture::Objective::kRank3, 0.5, 1.0)) < 1e-4);
  }
  CHECK(checked > 0);
}

TEST_CASE("gradient_check: constant closure has zero gradient both ways") {
  const auto p = init_params(Architecture{3, {2}, Activation::kRelu}, 1);
  const LossClosure constant = [](const ScorerParams&, Gradients*) { return 4.0; };
  CHECK(gradient_check(p, constant) == 0.0);
}

TEST_CASE("dropout: inactive at rate 0, seeded and unbiased otherwise") {
  const auto p = init_params(Architecture{4, {16}, Activation::kRelu}, 5);
  std::mt19937_64 rng(5);
  const auto clip = fixture::random_clip(rng, 4);
  const auto v = fixture::views(clip);
  const double plain = forward_clip(p, v).score;
  Rng a(77), b(77);
  CHECK(forward_clip(p, v, {0.0, &a}).score == plain);
  Rng c(77);
  const double d1 = forward_clip(p, v, {0.5, &b}).score;
  const double d2 = forward_clip(p, v, {0.5, &c}).score;
  CHECK(d1 == d2);
  Rng many(1);
  double sum = 0.0;
  constexpr int kDraws = 20000;
  for (int k = 0; k < kDraws; ++k) sum += forward_clip(p, v, {0.5, &many}).score;
  CHECK(sum / kDraws == doctest::Approx(plain).epsilon(0.05).scale(1.0));
}

TEST_CASE("params file round trip and malformed input") {
  TempDir dir("scorer-params");
  const auto p = init_params(Architecture{5, {4, 2}, Activation::kTanh}, 12);
  save_params(dir / "p.skp", p);
  const auto back = load_params(dir / "p.skp");
  CHECK(back.arch == p.arch);
  for (std::size_t k = 0; k < p.parameter_count(); ++k) {
    CHECK(back.at(k) == static_cast<double>(static_cast<float>(p.at(k))));
  }
  auto bytes = encode_params_file(to_params_file(p));
  CHECK(decode_params_file(bytes).values.size() == p.parameter_count());
  bytes[0] = 'X';
  CHECK_THROWS_CODE(decode_params_file(bytes), ErrorCode::kMalformedHeader);
  auto truncated = encode_params_file(to_params_file(p));
  truncated.resize(truncated.size() - 2);
  CHECK_THROWS_CODE(decode_params_file(truncated), ErrorCode::kMalformedHeader);
  CHECK_THROWS_CODE(load_params(dir / "missing.skp"), ErrorCode::kIo);
}
