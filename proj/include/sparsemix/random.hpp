#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace sparsemix {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

/// xoshiro256++; satisfies UniformRandomBitGenerator.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed) noexcept {
        for (auto& word : s_) word = detail::splitmix64(seed);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = detail::rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = detail::rotl(s_[3], 45);
        return result;
    }

    /// Uniform on the open interval (0, 1): midpoints of the 2^53 grid.
    double uniform() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1p-53; }

private:
    std::array<std::uint64_t, 4> s_{};
};

/// Identifies one replicate's random substream. A value type: equal
/// (master_seed, stream_id) pairs always yield the same sequence.
struct RandomStream {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;

    Xoshiro256 generator() const noexcept {
        // Hash both halves separately before combining so that neighbouring
        // (seed, id) pairs land on unrelated generator states.
        std::uint64_t a = master_seed;
        std::uint64_t b = stream_id ^ 0x6a09e667f3bcc909ULL;
        const std::uint64_t ha = detail::splitmix64(a);
        const std::uint64_t hb = detail::splitmix64(b);
        return Xoshiro256(ha ^ detail::rotl(hb, 32) ^ (hb * 0xd1342543de82ef95ULL));
    }

    RandomStream substream(std::uint64_t offset) const noexcept { return {master_seed, stream_id + offset}; }

    bool operator==(const RandomStream&) const = default;
};

/// Exp(1) by inversion.
inline double draw_exponential(Xoshiro256& rng) noexcept { return -std::log(rng.uniform()); }

}  // namespace sparsemix
