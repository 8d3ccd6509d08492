#ifndef SKETCHREC_HASH_HPP
#define SKETCHREC_HASH_HPP

#include <cstdint>
#include <string_view>

namespace sketchrec {

// 64-bit FNV-1a over raw bytes. Sketch buckets are assigned as hash % m,
// so bit patterns are reproducible across builds and platforms.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

// Stateless SplitMix64 scrambler; also used to derive independent stream
// seeds from a base seed plus indices.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Seeded SplitMix64 generator. All tool-level randomness goes through this
// so reports are byte-identical for a fixed seed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Uniform in [0, bound); bound must be positive.
    std::uint64_t next_below(std::uint64_t bound) noexcept {
        return next() % bound;
    }

private:
    std::uint64_t state_;
};

}  // namespace sketchrec

#endif
