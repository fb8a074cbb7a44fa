#pragma once

#include <cstdint>
#include <numeric>
#include <string_view>
#include <vector>

namespace aiprobe {

// Counter-based deterministic random stream. Each draw mixes (key, counter)
// through SplitMix64, so streams can be split hierarchically without the
// parent and child ever sharing draws, and identical seeds reproduce
// identical sequences on every platform.
class Rng {
  public:
    Rng() = default;
    explicit Rng(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    static std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
        return mix(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
    }

    static std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) {
        std::uint64_t h = seed;
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return mix(h);
    }

    std::uint64_t key() const { return key_; }

    std::uint64_t next_u64() { return mix(key_ ^ mix(counter_++)); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Multiply-high mapping; bias is O(n / 2^64).
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    Rng split(std::string_view label) const { return Rng(combine(key_, hash_bytes(label))); }
    Rng split(std::string_view label, std::uint64_t index) const {
        return Rng(combine(combine(key_, hash_bytes(label)), mix(index)));
    }
    Rng split(std::uint64_t index) const { return Rng(combine(key_, mix(index))); }

    // Fisher-Yates permutation of {0, ..., n-1}.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        std::iota(p.begin(), p.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(p[i - 1], p[j]);
        }
        return p;
    }

  private:
    std::uint64_t key_ = 0x853c49e6748fea9bULL;
    std::uint64_t counter_ = 0;
};

} // namespace aiprobe
