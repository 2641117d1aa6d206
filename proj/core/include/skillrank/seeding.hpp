#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <string_view>

namespace skillrank {

using Rng = std::mt19937_64;

// Stable labeled seed derivation. All randomness in the toolkit descends from
// one root seed; each consumer mixes in a label naming its purpose so that
// adding a new consumer never perturbs the streams of existing ones.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);

// Convenience overload: label parts are joined with '/'.
std::uint64_t derive_seed(std::uint64_t root,
                          std::initializer_list<std::string_view> parts);

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

}  // namespace skillrank
