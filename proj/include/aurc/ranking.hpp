#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aurc/special_functions.hpp"

namespace aurc {

enum class TiePolicy { stable, average };

enum class WeightKind { alpha_hat, alpha_prime, sele };

inline std::string to_string(TiePolicy p) {
    return p == TiePolicy::stable ? "stable" : "average";
}

inline std::string to_string(WeightKind k) {
    switch (k) {
        case WeightKind::alpha_hat: return "alpha_hat";
        case WeightKind::alpha_prime: return "alpha_prime";
        case WeightKind::sele: return "sele";
    }
    throw std::invalid_argument("unknown WeightKind");
}

// Indices 0..n-1 ordered so scores[perm[0]] <= scores[perm[1]] <= ...,
// ties kept in input order.
inline std::vector<std::size_t> sort_permutation(std::span<const double> scores) {
    if (scores.empty())
        throw std::invalid_argument("sort_permutation: empty scores");
    for (double s : scores) {
        if (std::isnan(s))
            throw std::invalid_argument("rank_ascending: NaN score rejected");
    }
    std::vector<std::size_t> perm(scores.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::stable_sort(perm.begin(), perm.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    return perm;
}

// Ascending 1-based ranks; rank n is the most confident sample. Ties
// resolve deterministically by input index (the stable policy).
inline std::vector<int> rank_ascending(std::span<const double> scores) {
    const auto perm = sort_permutation(scores);
    std::vector<int> ranks(scores.size());
    for (std::size_t pos = 0; pos < perm.size(); ++pos)
        ranks[perm[pos]] = static_cast<int>(pos + 1);
    return ranks;
}

// Weight of the sample ranked r out of n.
inline double positional_weight(WeightKind kind, std::size_t n, std::size_t r,
                                const HarmonicTable& table) {
    if (r < 1 || r > n)
        throw std::domain_error("positional_weight: rank out of 1..n");
    switch (kind) {
        case WeightKind::alpha_hat:
            return table.at(n) - table.at(n - r);
        case WeightKind::alpha_prime:
            return -std::log1p(-static_cast<double>(r) / static_cast<double>(n + 1));
        case WeightKind::sele:
            return static_cast<double>(r) / static_cast<double>(n);
    }
    throw std::invalid_argument("unknown WeightKind");
}

struct WeightVector {
    WeightKind kind;
    std::size_t n;
    std::vector<double> weights;
};

namespace detail {

inline WeightVector weights_from_ranks(WeightKind kind, std::size_t n,
                                       std::span<const int> ranks,
                                       const HarmonicTable& table) {
    if (ranks.size() != n)
        throw std::invalid_argument("weight vector: ranks size must equal n");
    WeightVector wv{kind, n, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        if (ranks[i] < 1 || ranks[i] > static_cast<int>(n))
            throw std::domain_error("weight vector: rank out of 1..n");
        wv.weights[i] = positional_weight(kind, n, static_cast<std::size_t>(ranks[i]), table);
    }
    return wv;
}

} // namespace detail

// alpha_hat_i = H_n - H_{n-r_i}; mean over a full rank vector is exactly 1.
inline WeightVector alpha_hat_weights(std::size_t n, std::span<const int> ranks,
                                      const HarmonicTable& table) {
    return detail::weights_from_ranks(WeightKind::alpha_hat, n, ranks, table);
}

inline WeightVector alpha_hat_weights(std::size_t n, std::span<const int> ranks) {
    return alpha_hat_weights(n, ranks, harmonic_prefix(n));
}

// alpha_prime_i = -ln(1 - r_i/(n+1)); elementwise below alpha_hat.
inline WeightVector alpha_prime_weights(std::size_t n, std::span<const int> ranks) {
    if (ranks.size() != n)
        throw std::invalid_argument("weight vector: ranks size must equal n");
    WeightVector wv{WeightKind::alpha_prime, n, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        if (ranks[i] < 1 || ranks[i] > static_cast<int>(n))
            throw std::domain_error("weight vector: rank out of 1..n");
        wv.weights[i] =
            -std::log1p(-static_cast<double>(ranks[i]) / static_cast<double>(n + 1));
    }
    return wv;
}

// sele weight r_i/n.
inline WeightVector sele_weights(std::size_t n, std::span<const int> ranks) {
    if (ranks.size() != n)
        throw std::invalid_argument("weight vector: ranks size must equal n");
    WeightVector wv{WeightKind::sele, n, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        if (ranks[i] < 1 || ranks[i] > static_cast<int>(n))
            throw std::domain_error("weight vector: rank out of 1..n");
        wv.weights[i] = static_cast<double>(ranks[i]) / static_cast<double>(n);
    }
    return wv;
}

// Per-sample weights in input order. Under the average policy every
// member of a tied-score group gets the mean of the positional weights
// the group spans, which makes the result invariant to the input order
// of tied samples.
inline WeightVector weights_for_scores(std::span<const double> scores, WeightKind kind,
                                       TiePolicy policy, const HarmonicTable& table) {
    const std::size_t n = scores.size();
    const auto perm = sort_permutation(scores);
    WeightVector wv{kind, n, std::vector<double>(n)};
    if (policy == TiePolicy::stable) {
        for (std::size_t pos = 0; pos < n; ++pos)
            wv.weights[perm[pos]] = positional_weight(kind, n, pos + 1, table);
        return wv;
    }
    std::size_t lo = 0;
    while (lo < n) {
        std::size_t hi = lo + 1;
        while (hi < n && scores[perm[hi]] == scores[perm[lo]]) ++hi;
        CompensatedSum acc;
        for (std::size_t pos = lo; pos < hi; ++pos)
            acc.add(positional_weight(kind, n, pos + 1, table));
        const double group_mean = acc.value() / static_cast<double>(hi - lo);
        for (std::size_t pos = lo; pos < hi; ++pos) wv.weights[perm[pos]] = group_mean;
        lo = hi;
    }
    return wv;
}

inline WeightVector weights_for_scores(std::span<const double> scores, WeightKind kind,
                                       TiePolicy policy) {
    return weights_for_scores(scores, kind, policy, harmonic_prefix(scores.size()));
}

struct RankedBatch {
    std::vector<double> scores;
    std::vector<int> ranks;
    std::vector<double> losses;
    TiePolicy tie_policy;
};

inline RankedBatch make_ranked_batch(std::span<const double> scores,
                                     std::span<const double> losses, TiePolicy policy) {
    if (scores.size() != losses.size())
        throw std::invalid_argument("make_ranked_batch: scores/losses size mismatch");
    RankedBatch batch;
    batch.scores.assign(scores.begin(), scores.end());
    batch.losses.assign(losses.begin(), losses.end());
    batch.ranks = rank_ascending(scores);
    batch.tie_policy = policy;
    return batch;
}

} // namespace aurc
