#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace skillrank {

// Half-open row interval [begin, end).
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const RowRange&, const RowRange&) = default;
};

// `parts` contiguous ranges tiling [offset, offset + length); sizes differ by
// at most one and the earlier ranges take the remainder.
std::vector<RowRange> tile(std::size_t offset, std::size_t length,
                           std::size_t parts);

// N uniform splits of a sequence. Throws Error(kSampling) when
// length < 3 * n, because each split must admit three nonempty segments.
std::vector<RowRange> uniform_splits(std::size_t length, std::size_t n);

struct SplitPlan {
  std::string video_id;
  std::size_t split_index = 0;  // 0-based, < split_count
  std::size_t split_count = 1;
  RowRange split;
  std::array<RowRange, 3> segments;
};

SplitPlan plan_split(std::string video_id, std::size_t length,
                     std::size_t split_count, std::size_t split_index);

// One uniformly drawn row from each of the plan's three segments.
std::array<std::size_t, 3> sample_training_snippets(const SplitPlan& plan,
                                                    std::uint64_t rng_seed);

enum class SnippetMode { kUniform, kStart, kEnd, kRandom };

std::string_view snippet_mode_name(SnippetMode mode);
SnippetMode parse_snippet_mode(std::string_view name);

// Test-time snippet rows, sorted ascending and deduplicated. Uniform mode takes
// the center of each of sigma equal bins: floor((t + 0.5) * length / sigma).
std::vector<std::size_t> test_snippets(std::size_t length, std::size_t sigma,
                                       SnippetMode mode, std::uint64_t rng_seed = 0);

}  // namespace skillrank
