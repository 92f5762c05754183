#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace iccl {

// SplitMix64 (Steele, Lea, Flood 2014). Pinned so shuffles reproduce
// bit-identically in any implementation language.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
};

// FNV-1a, 64-bit. Used wherever a pinned cross-platform string hash is
// needed (shuffle seeding, embedding cache keys).
inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

// Fisher-Yates, downward loop, modulo draw: for i = n-1..1,
// j = next() % (i+1), swap(v[i], v[j]).
template <typename T>
void fisher_yates_shuffle(std::vector<T>& items, SplitMix64& rng) {
    if (items.size() < 2) return;
    for (std::size_t i = items.size() - 1; i >= 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next() % (i + 1));
        std::swap(items[i], items[j]);
    }
}

} // namespace iccl
