#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace byzsgd {

/// splitmix64 finalizer; good avalanche, cheap.
constexpr uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives decorrelated, reproducible RNG streams from one master seed.
/// Stream identity is (tag, a, b); e.g. ("prop_batch", epoch, node).
/// Runner variants that must share draws (the f=0 reduction) use identical
/// stream identities for the shared phases, so extra draws elsewhere cannot
/// desynchronize them.
class RngFactory {
 public:
  explicit RngFactory(uint64_t master) : master_(master) {}

  uint64_t derive(std::string_view tag, uint64_t a = 0, uint64_t b = 0) const {
    uint64_t s = master_;
    s = mix64(s ^ fnv1a(tag));
    s = mix64(s ^ (a * 0x9e3779b97f4a7c15ULL));
    s = mix64(s ^ (b * 0xc2b2ae3d27d4eb4fULL));
    return s;
  }

  std::mt19937_64 stream(std::string_view tag, uint64_t a = 0, uint64_t b = 0) const {
    return std::mt19937_64(derive(tag, a, b));
  }

  uint64_t master() const { return master_; }

 private:
  uint64_t master_;
};

/// Uniform sample of k distinct ints from [0, n) without materializing the
/// population (sparse Fisher-Yates). Deterministic given the generator state.
inline std::vector<int> sample_without_replacement(int n, int k, std::mt19937_64& rng) {
  std::unordered_map<int, int> swapped;
  swapped.reserve(static_cast<size_t>(k) * 2);
  std::vector<int> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> dist(i, n - 1);
    int j = dist(rng);
    auto ji = swapped.find(j);
    int vj = (ji == swapped.end()) ? j : ji->second;
    auto ii = swapped.find(i);
    int vi = (ii == swapped.end()) ? i : ii->second;
    out.push_back(vj);
    swapped[j] = vi;
  }
  return out;
}

}  // namespace byzsgd
