#include "skillrank/seeding.hpp"

namespace skillrank {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view label) {
  return splitmix64(splitmix64(root) ^ fnv1a(kFnvOffset, label));
}

std::uint64_t derive_seed(std::uint64_t root,
                          std::initializer_list<std::string_view> parts) {
  std::uint64_t h = kFnvOffset;
  bool first = true;
  for (auto part : parts) {
    if (!first) h = fnv1a(h, "/");
    h = fnv1a(h, part);
    first = false;
  }
  return splitmix64(splitmix64(root) ^ h);
}

}  // namespace skillrank
