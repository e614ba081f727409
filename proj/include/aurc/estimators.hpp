#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aurc/losses.hpp"
#include "aurc/numeric.hpp"
#include "aurc/ranking.hpp"

namespace aurc {

enum class EstimatorKind {
    naive_empirical,
    plugin_alpha_hat,
    plugin_alpha_prime,
    sele,
    sele_times_two,
};

inline std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::naive_empirical: return "naive_empirical";
        case EstimatorKind::plugin_alpha_hat: return "plugin_alpha_hat";
        case EstimatorKind::plugin_alpha_prime: return "plugin_alpha_prime";
        case EstimatorKind::sele: return "sele";
        case EstimatorKind::sele_times_two: return "sele_times_two";
    }
    throw std::invalid_argument("unknown EstimatorKind");
}

struct EstimatorReport {
    EstimatorKind estimator;
    double value = 0.0;
    std::size_t n = 0;
    TiePolicy tie_policy = TiePolicy::stable;
    std::optional<LossKind> loss_kind;
    std::optional<CsfKind> csf_kind;
    std::optional<std::uint64_t> seed;
};

// The quadratic reference path refuses batches it was never meant for.
inline constexpr std::size_t kNaiveMaxN = 20000;

namespace detail {

inline void validate_batch(std::span<const double> losses, std::span<const double> scores) {
    if (losses.empty()) throw std::invalid_argument("estimator: empty batch");
    if (losses.size() != scores.size())
        throw std::invalid_argument("estimator: losses/scores size mismatch");
    for (double l : losses)
        if (!(l >= 0.0) || !std::isfinite(l))
            throw std::invalid_argument("estimator: losses must be finite and >= 0");
    for (double s : scores)
        if (!std::isfinite(s))
            throw std::invalid_argument("estimator: scores must be finite");
}

} // namespace detail

// Literal evaluation of the nested-mean form: for every threshold
// sample j, mean accepted loss over mean accepted fraction, with >=
// indicators, averaged over j. Quadratic on purpose -- this is the
// reference the fast path is checked against.
inline double naive_empirical_aurc(std::span<const double> losses,
                                   std::span<const double> scores) {
    detail::validate_batch(losses, scores);
    const std::size_t n = losses.size();
    if (n > kNaiveMaxN)
        throw std::invalid_argument("naive_empirical_aurc: capped at n <= 20000");
    CompensatedSum outer;
    for (std::size_t j = 0; j < n; ++j) {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (scores[i] >= scores[j]) {
                num += losses[i];
                den += 1.0;
            }
        }
        outer.add(num / den);
    }
    return outer.value() / static_cast<double>(n);
}

// (1/n) sum w_i * loss_i with rank-based weights; O(n log n) in the sort.
inline EstimatorReport plugin_aurc(std::span<const double> losses,
                                   std::span<const double> scores, WeightKind weight_kind,
                                   TiePolicy tie_policy, const HarmonicTable& table) {
    detail::validate_batch(losses, scores);
    const auto wv = weights_for_scores(scores, weight_kind, tie_policy, table);
    CompensatedSum acc;
    for (std::size_t i = 0; i < losses.size(); ++i) acc.add(wv.weights[i] * losses[i]);
    EstimatorReport rep;
    rep.estimator = weight_kind == WeightKind::alpha_hat ? EstimatorKind::plugin_alpha_hat
                    : weight_kind == WeightKind::alpha_prime
                        ? EstimatorKind::plugin_alpha_prime
                        : EstimatorKind::sele;
    rep.value = acc.value() / static_cast<double>(losses.size());
    rep.n = losses.size();
    rep.tie_policy = tie_policy;
    return rep;
}

inline EstimatorReport plugin_aurc(std::span<const double> losses,
                                   std::span<const double> scores, WeightKind weight_kind,
                                   TiePolicy tie_policy = TiePolicy::stable) {
    return plugin_aurc(losses, scores, weight_kind, tie_policy,
                       harmonic_prefix(losses.size()));
}

// sum (r_i/n^2) loss_i, i.e. the plug-in form with r/n weights.
inline EstimatorReport sele_score(std::span<const double> losses,
                                  std::span<const double> scores,
                                  TiePolicy tie_policy = TiePolicy::stable) {
    static const HarmonicTable no_table = harmonic_prefix(0);
    EstimatorReport rep = plugin_aurc(losses, scores, WeightKind::sele, tie_policy, no_table);
    rep.estimator = EstimatorKind::sele;
    return rep;
}

inline EstimatorReport evaluate_estimator(EstimatorKind kind, std::span<const double> losses,
                                          std::span<const double> scores,
                                          TiePolicy tie_policy, const HarmonicTable& table) {
    switch (kind) {
        case EstimatorKind::naive_empirical: {
            detail::validate_batch(losses, scores);
            EstimatorReport rep;
            rep.estimator = kind;
            rep.value = naive_empirical_aurc(losses, scores);
            rep.n = losses.size();
            rep.tie_policy = tie_policy;
            return rep;
        }
        case EstimatorKind::plugin_alpha_hat:
            return plugin_aurc(losses, scores, WeightKind::alpha_hat, tie_policy, table);
        case EstimatorKind::plugin_alpha_prime:
            return plugin_aurc(losses, scores, WeightKind::alpha_prime, tie_policy, table);
        case EstimatorKind::sele:
            return plugin_aurc(losses, scores, WeightKind::sele, tie_policy, table);
        case EstimatorKind::sele_times_two: {
            EstimatorReport rep = plugin_aurc(losses, scores, WeightKind::sele, tie_policy, table);
            rep.estimator = EstimatorKind::sele_times_two;
            rep.value *= 2.0;
            return rep;
        }
    }
    throw std::invalid_argument("unknown EstimatorKind");
}

// Synthetic population where every sample carries its true score
// percentile; gives an exact reference value for convergence studies.
struct PopulationSpec {
    std::vector<double> percentiles; // in (0,1), pairwise distinct
    std::vector<double> losses;      // >= 0
};

inline void validate_population(const PopulationSpec& spec) {
    if (spec.percentiles.size() != spec.losses.size())
        throw std::invalid_argument("PopulationSpec: size mismatch");
    if (spec.percentiles.empty())
        throw std::invalid_argument("PopulationSpec: empty");
    for (double b : spec.percentiles)
        if (!(b > 0.0 && b < 1.0))
            throw std::domain_error("PopulationSpec: percentile outside (0,1)");
    for (double l : spec.losses)
        if (!(l >= 0.0) || !std::isfinite(l))
            throw std::invalid_argument("PopulationSpec: losses must be finite and >= 0");
    auto sorted = spec.percentiles;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::domain_error("PopulationSpec: duplicate percentile");
}

// mean over samples of -ln(1 - beta_i) * loss_i.
inline double population_aurc(const PopulationSpec& spec) {
    validate_population(spec);
    CompensatedSum acc;
    for (std::size_t i = 0; i < spec.losses.size(); ++i)
        acc.add(-std::log1p(-spec.percentiles[i]) * spec.losses[i]);
    return acc.value() / static_cast<double>(spec.losses.size());
}

struct RiskCoveragePoint {
    double coverage;
    double selective_risk;
};

// One point per threshold sample, thresholds ascending (coverage
// descending). Tied scores are accepted together, matching the >=
// indicator of the quadratic form. The plain mean of the risks equals
// naive_empirical_aurc on tie-free scores.
inline std::vector<RiskCoveragePoint> risk_coverage_curve(std::span<const double> losses,
                                                          std::span<const double> scores) {
    detail::validate_batch(losses, scores);
    const std::size_t n = losses.size();
    const auto perm = sort_permutation(scores);
    std::vector<double> suffix_loss(n + 1, 0.0);
    for (std::size_t pos = n; pos-- > 0;)
        suffix_loss[pos] = suffix_loss[pos + 1] + losses[perm[pos]];
    std::vector<RiskCoveragePoint> curve(n);
    std::size_t lo = 0;
    while (lo < n) {
        std::size_t hi = lo + 1;
        while (hi < n && scores[perm[hi]] == scores[perm[lo]]) ++hi;
        const double accepted = static_cast<double>(n - lo);
        const RiskCoveragePoint point{accepted / static_cast<double>(n),
                                      suffix_loss[lo] / accepted};
        for (std::size_t pos = lo; pos < hi; ++pos) curve[pos] = point;
        lo = hi;
    }
    return curve;
}

} // namespace aurc
