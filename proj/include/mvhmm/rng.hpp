#ifndef MVHMM_RNG_HPP
#define MVHMM_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace mvhmm {

/// Seed used by every randomized entry point when the caller gives none.
inline constexpr std::uint64_t kDefaultSeed = 20210611;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child stream seed from a master seed and a path of stream identifiers.
/// Independent of evaluation order, so parallel and sequential runs agree.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(master);
  for (auto p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

/// FNV-1a; stable across platforms, unlike std::hash.
constexpr std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mvhmm

#endif  // MVHMM_RNG_HPP
