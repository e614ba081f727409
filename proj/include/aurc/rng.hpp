#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace aurc {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

// Seeded xoshiro256++ stream. The generator and the double conversion
// are fixed here rather than delegated to <random> distributions, so a
// seed pins the exact sample sequence on every platform. Streams for
// parallel work come from derive(), never from sharing a handle.
class RngHandle {
  public:
    explicit RngHandle(std::uint64_t seed) : seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = detail::splitmix64(sm);
    }

    RngHandle(std::uint64_t seed, std::uint64_t stream_id)
        : RngHandle(mix_stream(seed, stream_id)) {}

    std::uint64_t seed() const { return seed_; }

    // Independent child stream; (seed, stream_id) fully determines it.
    RngHandle derive(std::uint64_t stream_id) const {
        return RngHandle(seed_, stream_id);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    // Uniform on the open interval (0,1): (counter + 1/2) * 2^-53.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the sine branch is discarded to
    // keep the draw count per call fixed.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

  private:
    static std::uint64_t mix_stream(std::uint64_t seed, std::uint64_t stream_id) {
        std::uint64_t sm = seed ^ (0x6a09e667f3bcc909ULL + stream_id);
        const std::uint64_t a = detail::splitmix64(sm);
        return a ^ detail::splitmix64(sm);
    }

    std::uint64_t seed_;
    std::uint64_t state_[4];
};

namespace detail {

// Marsaglia-Tsang squeeze/rejection for Gamma(shape, 1), shape >= 1.
inline double sample_gamma_ge1(double shape, RngHandle& rng) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

} // namespace detail

inline double sample_gamma(double shape, RngHandle& rng) {
    if (!(shape > 0.0)) throw std::domain_error("sample_gamma: requires shape > 0");
    if (shape >= 1.0) return detail::sample_gamma_ge1(shape, rng);
    // Gamma(a) = Gamma(a+1) * U^(1/a) for a < 1.
    const double boost = std::pow(rng.uniform(), 1.0 / shape);
    return detail::sample_gamma_ge1(shape + 1.0, rng) * boost;
}

// Beta(a,b) as X/(X+Y) with independent gammas; valid for all a,b > 0.
inline double sample_beta(double a, double b, RngHandle& rng) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::domain_error("sample_beta: requires a > 0 and b > 0");
    const double x = sample_gamma(a, rng);
    const double y = sample_gamma(b, rng);
    return x / (x + y);
}

// n i.i.d. uniforms sorted ascending; the k-th entry is then
// Beta(k, n+1-k) distributed.
inline std::vector<double> sample_uniform_order_stats(std::size_t n, RngHandle& rng) {
    std::vector<double> draws(n);
    for (auto& d : draws) d = rng.uniform();
    std::sort(draws.begin(), draws.end());
    return draws;
}

} // namespace aurc
