#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace fsabr {

inline constexpr std::uint64_t splitmix_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// SplitMix64 started from a hashed (seed, path, stream) key. Each substream
// is a pure function of its key, so results do not depend on which worker
// draws them or in what order.
class StreamRng {
public:
    using result_type = std::uint64_t;

    StreamRng(std::uint64_t seed, std::uint64_t path, std::uint64_t stream)
        : state_(splitmix_mix(splitmix_mix(seed ^ 0x6a09e667f3bcc909ULL) + splitmix_mix(path + 0x9e3779b97f4a7c15ULL) * 3 +
                              stream * 0xbb67ae8584caa73bULL)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return splitmix_mix(state_);
    }

private:
    std::uint64_t state_;
};

// Substream ids used by the path generators.
enum class Stream : std::uint64_t { driving_bm = 1, fbm_extra = 2, second_bm = 3 };

// Standard normals for one path and substream. With antithetic sampling,
// path 2m+1 reuses the draws of path 2m with flipped sign.
inline void fill_normals(std::uint64_t seed, std::uint64_t path, Stream stream, bool antithetic, std::span<double> out) {
    const std::uint64_t key = antithetic ? path / 2 : path;
    const double sign = (antithetic && (path % 2 == 1)) ? -1.0 : 1.0;
    StreamRng rng(seed, key, static_cast<std::uint64_t>(stream));
    std::normal_distribution<double> nd;
    for (double& z : out) z = sign * nd(rng);
}

} // namespace fsabr
