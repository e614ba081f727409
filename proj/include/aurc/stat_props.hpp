#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aurc/ranking.hpp"
#include "aurc/rng.hpp"
#include "aurc/special_functions.hpp"

namespace aurc {

namespace detail {

// E[f(r)] for the rank r = 1 + Bin(n-1, beta) of a sample whose true
// percentile is beta. Summed outward from the binomial mode with a
// max-shifted accumulator; for n > 1e4 terms below 1e-18 relative mass
// are dropped (they cannot move the result at double precision).
inline double rank_expectation(std::size_t n, double beta,
                               const std::function<double(std::size_t)>& f) {
    if (n < 1) throw std::domain_error("rank_expectation: requires n >= 1");
    if (!(beta >= 0.0 && beta < 1.0))
        throw std::domain_error("rank_expectation: requires beta in [0,1)");
    const long trials = static_cast<long>(n) - 1;
    if (trials == 0 || beta == 0.0) return f(1);
    const bool truncate = n > 10000;
    const long mode = std::min<long>(trials, static_cast<long>(
                                                 static_cast<double>(n) * beta));
    const double log_peak = log_binomial_pmf(mode, trials, beta);
    const double cutoff = std::log(1e-18);
    CompensatedSum acc;
    acc.add(f(static_cast<std::size_t>(mode) + 1));
    for (long i = mode + 1; i <= trials; ++i) {
        const double rel = log_binomial_pmf(i, trials, beta) - log_peak;
        if (truncate && rel < cutoff) break;
        acc.add(std::exp(rel) * f(static_cast<std::size_t>(i) + 1));
    }
    for (long i = mode - 1; i >= 0; --i) {
        const double rel = log_binomial_pmf(i, trials, beta) - log_peak;
        if (truncate && rel < cutoff) break;
        acc.add(std::exp(rel) * f(static_cast<std::size_t>(i) + 1));
    }
    return std::exp(log_peak) * acc.value();
}

inline void require_beta_open(double beta, const char* who) {
    if (!(beta > 0.0 && beta < 1.0))
        throw std::domain_error(std::string(who) + ": requires beta in (0,1)");
}

inline void require_rank(std::size_t n, std::size_t rank, const char* who) {
    if (n < 1 || rank < 1 || rank > n)
        throw std::domain_error(std::string(who) + ": requires 1 <= rank <= n");
}

} // namespace detail

// E[H_n - H_{n-r}] - (-ln(1-beta)) with r = 1 + Bin(n-1, beta).
inline double bias_alpha_hat(std::size_t n, double beta) {
    detail::require_beta_open(beta, "bias_alpha_hat");
    const HarmonicTable table = harmonic_prefix(n);
    const double expected_deficit = detail::rank_expectation(
        n, beta, [&](std::size_t r) { return table[n - r]; });
    return table[n] - expected_deficit + std::log1p(-beta);
}

// Same conditioning with the log-rank-ratio weight -ln(1 - r/(n+1)).
inline double bias_alpha_prime(std::size_t n, double beta) {
    detail::require_beta_open(beta, "bias_alpha_prime");
    const double np1 = static_cast<double>(n + 1);
    const double expected_weight = detail::rank_expectation(
        n, beta,
        [&](std::size_t r) { return -std::log1p(-static_cast<double>(r) / np1); });
    return expected_weight + std::log1p(-beta);
}

// r/n weight: E[r] = 1 + (n-1) beta collapses the sum in closed form.
inline double bias_sele(std::size_t n, double beta) {
    detail::require_beta_open(beta, "bias_sele");
    if (n < 1) throw std::domain_error("bias_sele: requires n >= 1");
    const double dn = static_cast<double>(n);
    return (1.0 + (dn - 1.0) * beta) / dn + std::log1p(-beta);
}

// Literal binomial sum behind bias_sele; kept as the cross-check route.
inline double bias_sele_literal(std::size_t n, double beta) {
    detail::require_beta_open(beta, "bias_sele_literal");
    const double dn = static_cast<double>(n);
    const double expected_weight = detail::rank_expectation(
        n, beta, [&](std::size_t r) { return static_cast<double>(r) / dn; });
    return expected_weight + std::log1p(-beta);
}

// MSE of the harmonic-difference weight at a fixed rank:
// psi'(n+1-r) - psi'(n+1).
inline double mse_alpha_hat(std::size_t n, std::size_t rank) {
    detail::require_rank(n, rank, "mse_alpha_hat");
    return trigamma(static_cast<double>(n + 1 - rank)) -
           trigamma(static_cast<double>(n + 1));
}

// The same quantity as the explicit sum over 1/k^2; independent of the
// trigamma implementation.
inline double mse_alpha_hat_telescoped(std::size_t n, std::size_t rank) {
    detail::require_rank(n, rank, "mse_alpha_hat_telescoped");
    CompensatedSum acc;
    for (std::size_t k = n + 1 - rank; k <= n; ++k)
        acc.add(1.0 / (static_cast<double>(k) * static_cast<double>(k)));
    return acc.value();
}

// MSE of the log-rank-ratio weight; exceeds mse_alpha_hat by the
// squared gap between the two weights.
inline double mse_alpha_prime(std::size_t n, std::size_t rank) {
    detail::require_rank(n, rank, "mse_alpha_prime");
    const HarmonicTable table = harmonic_prefix(n);
    const double gap =
        std::log1p(-static_cast<double>(rank) / static_cast<double>(n + 1)) +
        table[n] - table[n - rank];
    return mse_alpha_hat(n, rank) + gap * gap;
}

// Two-sided envelope scale beta/(n(1-beta)+1).
inline double mse_bound(std::size_t n, double beta) {
    if (!(beta >= 0.0 && beta < 1.0))
        throw std::domain_error("mse_bound: requires beta in [0,1)");
    return beta / (static_cast<double>(n) * (1.0 - beta) + 1.0);
}

// Integral form (n+1) ln(n+1) / n^2 - 1/n of the average weight MSE.
inline double avg_mse_closed_form(std::size_t n) {
    if (n < 1) throw std::domain_error("avg_mse_closed_form: requires n >= 1");
    const double dn = static_cast<double>(n);
    return (dn + 1.0) * std::log(dn + 1.0) / (dn * dn) - 1.0 / dn;
}

// Rank-averaged mse_alpha_hat. Collapses exactly to H_n/n, which the
// tests hold against both routes.
inline double avg_mse_direct(std::size_t n) {
    if (n < 1) throw std::domain_error("avg_mse_direct: requires n >= 1");
    CompensatedSum acc;
    for (std::size_t r = 1; r <= n; ++r) acc.add(mse_alpha_hat(n, r));
    return acc.value() / static_cast<double>(n);
}

struct WeightMcStats {
    double bias_est = 0.0;
    double mse_est = 0.0;
    double stderr_bias = 0.0;
    double stderr_mse = 0.0;
};

// Simulation of the weight error conditioned on the true percentile:
// draw the rank as 1 + Bin(n-1, beta) by counting n-1 uniforms, apply
// the weight, compare against -ln(1-beta). This is the oracle for the
// bias formulas above, whose conditioning is the same.
inline WeightMcStats mc_weight_stats(std::size_t n, double beta, WeightKind kind,
                                     std::size_t reps, RngHandle& rng) {
    if (reps < 1) throw std::domain_error("mc_weight_stats: requires reps >= 1");
    if (!(beta >= 0.0 && beta < 1.0))
        throw std::domain_error("mc_weight_stats: requires beta in [0,1)");
    const HarmonicTable table = harmonic_prefix(n);
    const double alpha = -std::log1p(-beta);
    CompensatedSum sum_d, sum_d2, sum_d4;
    for (std::size_t rep = 0; rep < reps; ++rep) {
        std::size_t below = 0;
        for (std::size_t i = 0; i + 1 < n; ++i)
            if (rng.uniform() < beta) ++below;
        const double d = positional_weight(kind, n, below + 1, table) - alpha;
        const double d2 = d * d;
        sum_d.add(d);
        sum_d2.add(d2);
        sum_d4.add(d2 * d2);
    }
    const double r = static_cast<double>(reps);
    WeightMcStats stats;
    stats.bias_est = sum_d.value() / r;
    stats.mse_est = sum_d2.value() / r;
    const double var_d = std::max(0.0, sum_d2.value() / r - stats.bias_est * stats.bias_est);
    const double var_d2 = std::max(0.0, sum_d4.value() / r - stats.mse_est * stats.mse_est);
    stats.stderr_bias = std::sqrt(var_d / r);
    stats.stderr_mse = std::sqrt(var_d2 / r);
    return stats;
}

struct MseMcEstimate {
    double mse_est = 0.0;
    double stderr_mse = 0.0;
};

// Simulation of the weight error conditioned on the rank: the
// percentile is Beta(rank, n+1-rank) distributed, the weight is fixed.
// This matches the conditioning of mse_alpha_hat / mse_alpha_prime.
inline MseMcEstimate mc_mse_given_rank(std::size_t n, std::size_t rank, WeightKind kind,
                                       std::size_t reps, RngHandle& rng) {
    detail::require_rank(n, rank, "mc_mse_given_rank");
    if (reps < 1) throw std::domain_error("mc_mse_given_rank: requires reps >= 1");
    if (kind == WeightKind::sele)
        throw std::invalid_argument("mc_mse_given_rank: no closed form is tracked for sele");
    const HarmonicTable table = harmonic_prefix(n);
    const double w = positional_weight(kind, n, rank, table);
    const double a = static_cast<double>(rank);
    const double b = static_cast<double>(n + 1 - rank);
    CompensatedSum sum_sq, sum_quad;
    for (std::size_t rep = 0; rep < reps; ++rep) {
        const double percentile = sample_beta(a, b, rng);
        const double d = w + std::log1p(-percentile);
        sum_sq.add(d * d);
        sum_quad.add(d * d * d * d);
    }
    const double r = static_cast<double>(reps);
    MseMcEstimate est;
    est.mse_est = sum_sq.value() / r;
    const double var = std::max(0.0, sum_quad.value() / r - est.mse_est * est.mse_est);
    est.stderr_mse = std::sqrt(var / r);
    return est;
}

enum class BiasMseQuantity {
    bias_alpha_hat,
    bias_alpha_prime,
    bias_sele,
    mse_alpha_hat,
    mse_alpha_prime,
    mse_bound,
    avg_mse,
};

inline std::string to_string(BiasMseQuantity q) {
    switch (q) {
        case BiasMseQuantity::bias_alpha_hat: return "bias_alpha_hat";
        case BiasMseQuantity::bias_alpha_prime: return "bias_alpha_prime";
        case BiasMseQuantity::bias_sele: return "bias_sele";
        case BiasMseQuantity::mse_alpha_hat: return "mse_alpha_hat";
        case BiasMseQuantity::mse_alpha_prime: return "mse_alpha_prime";
        case BiasMseQuantity::mse_bound: return "mse_bound";
        case BiasMseQuantity::avg_mse: return "avg_mse";
    }
    throw std::invalid_argument("unknown BiasMseQuantity");
}

struct CurvePoint {
    double x = 0.0; // beta for bias quantities, rank for MSE quantities
    double closed_form = 0.0;
    std::optional<double> mc_estimate;
    std::optional<double> mc_stderr;
    std::optional<std::uint64_t> mc_reps;
};

struct BiasMseCurve {
    BiasMseQuantity quantity;
    std::size_t n = 0;
    std::vector<CurvePoint> points;
};

// Grid beta -> nearest admissible rank.
inline std::size_t rank_for_percentile(std::size_t n, double beta) {
    detail::require_beta_open(beta, "rank_for_percentile");
    const auto r = static_cast<long>(std::lround(beta * static_cast<double>(n + 1)));
    return static_cast<std::size_t>(std::clamp<long>(r, 1, static_cast<long>(n)));
}

inline BiasMseCurve make_bias_curve(BiasMseQuantity quantity, std::size_t n,
                                    std::span<const double> betas, std::size_t mc_reps,
                                    RngHandle rng) {
    WeightKind kind;
    double (*closed)(std::size_t, double) = nullptr;
    switch (quantity) {
        case BiasMseQuantity::bias_alpha_hat:
            kind = WeightKind::alpha_hat;
            closed = &bias_alpha_hat;
            break;
        case BiasMseQuantity::bias_alpha_prime:
            kind = WeightKind::alpha_prime;
            closed = &bias_alpha_prime;
            break;
        case BiasMseQuantity::bias_sele:
            kind = WeightKind::sele;
            closed = &bias_sele;
            break;
        default:
            throw std::invalid_argument("make_bias_curve: not a bias quantity");
    }
    BiasMseCurve curve{quantity, n, {}};
    curve.points.reserve(betas.size());
    for (std::size_t i = 0; i < betas.size(); ++i) {
        CurvePoint pt;
        pt.x = betas[i];
        pt.closed_form = closed(n, betas[i]);
        if (mc_reps > 0) {
            RngHandle point_rng = rng.derive(i);
            const auto stats = mc_weight_stats(n, betas[i], kind, mc_reps, point_rng);
            pt.mc_estimate = stats.bias_est;
            pt.mc_stderr = stats.stderr_bias;
            pt.mc_reps = mc_reps;
        }
        curve.points.push_back(pt);
    }
    return curve;
}

inline BiasMseCurve make_mse_curve(BiasMseQuantity quantity, std::size_t n,
                                   std::span<const double> betas, std::size_t mc_reps,
                                   RngHandle rng) {
    if (quantity != BiasMseQuantity::mse_alpha_hat &&
        quantity != BiasMseQuantity::mse_alpha_prime &&
        quantity != BiasMseQuantity::mse_bound)
        throw std::invalid_argument("make_mse_curve: not an MSE quantity");
    BiasMseCurve curve{quantity, n, {}};
    curve.points.reserve(betas.size());
    for (std::size_t i = 0; i < betas.size(); ++i) {
        const std::size_t rank = rank_for_percentile(n, betas[i]);
        CurvePoint pt;
        pt.x = static_cast<double>(rank);
        switch (quantity) {
            case BiasMseQuantity::mse_alpha_hat:
                pt.closed_form = mse_alpha_hat(n, rank);
                break;
            case BiasMseQuantity::mse_alpha_prime:
                pt.closed_form = mse_alpha_prime(n, rank);
                break;
            default:
                pt.closed_form =
                    mse_bound(n, static_cast<double>(rank) / static_cast<double>(n + 1));
                break;
        }
        if (mc_reps > 0 && quantity != BiasMseQuantity::mse_bound) {
            RngHandle point_rng = rng.derive(i);
            const auto kind = quantity == BiasMseQuantity::mse_alpha_hat
                                  ? WeightKind::alpha_hat
                                  : WeightKind::alpha_prime;
            const auto est = mc_mse_given_rank(n, rank, kind, mc_reps, point_rng);
            pt.mc_estimate = est.mse_est;
            pt.mc_stderr = est.stderr_mse;
            pt.mc_reps = mc_reps;
        }
        curve.points.push_back(pt);
    }
    return curve;
}

} // namespace aurc
