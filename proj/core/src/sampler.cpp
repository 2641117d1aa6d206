#include "skillrank/sampler.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "skillrank/error.hpp"
#include "skillrank/seeding.hpp"

namespace skillrank {

std::vector<RowRange> tile(std::size_t offset, std::size_t length,
                           std::size_t parts) {
  if (parts == 0) throw Error(ErrorCode::kSampling, "cannot tile into 0 parts");
  std::vector<RowRange> out;
  out.reserve(parts);
  const std::size_t base = length / parts;
  const std::size_t extra = length % parts;
  std::size_t begin = offset;
  for (std::size_t k = 0; k < parts; ++k) {
    const std::size_t size = base + (k < extra ? 1 : 0);
    out.push_back({begin, begin + size});
    begin += size;
  }
  return out;
}

std::vector<RowRange> uniform_splits(std::size_t length, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kSampling, "split count must be positive");
  if (length < 3 * n) {
    throw Error(ErrorCode::kSampling,
                "sequence of " + std::to_string(length) + " rows is too short for " +
                    std::to_string(n) + " splits; minimum length is " +
                    std::to_string(3 * n));
  }
  return tile(0, length, n);
}

SplitPlan plan_split(std::string video_id, std::size_t length,
                     std::size_t split_count, std::size_t split_index) {
  const auto splits = uniform_splits(length, split_count);
  if (split_index >= split_count) {
    throw Error(ErrorCode::kSampling, "split index out of range");
  }
  SplitPlan plan;
  plan.video_id = std::move(video_id);
  plan.split_index = split_index;
  plan.split_count = split_count;
  plan.split = splits[split_index];
  const auto segs = tile(plan.split.begin, plan.split.size(), 3);
  std::copy(segs.begin(), segs.end(), plan.segments.begin());
  return plan;
}

std::array<std::size_t, 3> sample_training_snippets(const SplitPlan& plan,
                                                    std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  std::array<std::size_t, 3> out{};
  for (std::size_t s = 0; s < 3; ++s) {
    const auto& seg = plan.segments[s];
    std::uniform_int_distribution<std::size_t> pick(seg.begin, seg.end - 1);
    out[s] = pick(rng);
  }
  return out;
}

std::string_view snippet_mode_name(SnippetMode mode) {
  switch (mode) {
    case SnippetMode::kUniform: return "uniform";
    case SnippetMode::kStart: return "start";
    case SnippetMode::kEnd: return "end";
    case SnippetMode::kRandom: return "random";
  }
  return "uniform";
}

SnippetMode parse_snippet_mode(std::string_view name) {
  if (name == "uniform") return SnippetMode::kUniform;
  if (name == "start") return SnippetMode::kStart;
  if (name == "end") return SnippetMode::kEnd;
  if (name == "random") return SnippetMode::kRandom;
  throw Error(ErrorCode::kConfiguration,
              "unknown snippet mode '" + std::string(name) + "'");
}

std::vector<std::size_t> test_snippets(std::size_t length, std::size_t sigma,
                                       SnippetMode mode, std::uint64_t rng_seed) {
  if (length == 0 || sigma == 0) {
    throw Error(ErrorCode::kSampling, "test sampling needs length and sigma >= 1");
  }
  std::vector<std::size_t> out;
  const std::size_t take = std::min(sigma, length);
  switch (mode) {
    case SnippetMode::kUniform:
      for (std::size_t t = 0; t < sigma; ++t) {
        out.push_back(((2 * t + 1) * length) / (2 * sigma));
      }
      break;
    case SnippetMode::kStart:
      out.resize(take);
      std::iota(out.begin(), out.end(), std::size_t{0});
      break;
    case SnippetMode::kEnd:
      out.resize(take);
      std::iota(out.begin(), out.end(), length - take);
      break;
    case SnippetMode::kRandom: {
      std::vector<std::size_t> all(length);
      std::iota(all.begin(), all.end(), std::size_t{0});
      Rng rng(rng_seed);
      std::sample(all.begin(), all.end(), std::back_inserter(out), take, rng);
      break;
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace skillrank
