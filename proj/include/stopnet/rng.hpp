#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace stopnet {

// SplitMix64 (Steele et al., "Fast splittable pseudorandom number generators").
// 64-bit state, one multiply-xor-shift chain per draw. All randomness in the
// project flows from a root seed through named streams (see derive_stream) so
// that every pipeline stage is reproducible from the config alone.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Standard normal via Box-Muller. Draws two uniforms per call; no spare is
    // cached so the stream position depends only on the call count.
    double normal() {
        const double u1 = 1.0 - next_double();  // (0, 1]
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Uniform integer in [0, n). Rejection-free modulo is fine here: n is tiny
    // compared to 2^64, bias is < n / 2^64.
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

// Derives an independent stream seed from a root seed and a label by mixing
// the FNV-1a hash of the label into the root through one SplitMix64 step.
inline std::uint64_t derive_stream(std::uint64_t root_seed, std::string_view label) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : label) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 1099511628211ULL;
    }
    SplitMix64 mix(root_seed ^ h);
    return mix.next_u64();
}

}  // namespace stopnet
