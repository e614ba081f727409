#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "aurc/numeric.hpp"

namespace aurc {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

// Harmonic numbers H_0..H_{n_max}, H_0 = 0, built by one compensated
// prefix pass so downstream weight identities hold to ~1 ulp.
struct HarmonicTable {
    std::vector<double> values;

    std::size_t n_max() const { return values.size() - 1; }

    double operator[](std::size_t i) const { return values[i]; }

    double at(std::size_t i) const {
        if (i >= values.size())
            throw std::domain_error("HarmonicTable: index exceeds n_max");
        return values[i];
    }
};

inline HarmonicTable harmonic_prefix(std::size_t n_max) {
    HarmonicTable table;
    table.values.resize(n_max + 1);
    table.values[0] = 0.0;
    CompensatedSum acc;
    for (std::size_t i = 1; i <= n_max; ++i) {
        acc.add(1.0 / static_cast<double>(i));
        table.values[i] = acc.value();
    }
    return table;
}

namespace detail {

// Asymptotic tail of psi(x) = ln x - 1/(2x) - sum B_2k / (2k x^2k).
// Coefficients are B_2k/(2k) for k = 1..7.
inline double digamma_asymptotic(double x) {
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv2 * (1.0 / 12.0 +
                inv2 * (-1.0 / 120.0 +
                        inv2 * (1.0 / 252.0 +
                                inv2 * (-1.0 / 240.0 +
                                        inv2 * (1.0 / 132.0 +
                                                inv2 * (-691.0 / 32760.0 +
                                                        inv2 * (1.0 / 12.0)))))));
    return std::log(x) - 0.5 * inv - series;
}

// psi'(x) = 1/x + 1/(2x^2) + sum B_2k / x^(2k+1).
inline double trigamma_asymptotic(double x) {
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv2 * (1.0 / 6.0 +
                inv2 * (-1.0 / 30.0 +
                        inv2 * (1.0 / 42.0 +
                                inv2 * (-1.0 / 30.0 +
                                        inv2 * (5.0 / 66.0 +
                                                inv2 * (-691.0 / 2730.0 +
                                                        inv2 * (7.0 / 6.0)))))));
    return inv + 0.5 * inv2 + inv * series;
}

} // namespace detail

// psi(x) for x > 0: recurrence psi(x) = psi(x+1) - 1/x lifts the
// argument to >= 10, then the Bernoulli series takes over.
inline double digamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("digamma: requires x > 0");
    double shift = 0.0;
    while (x < 10.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    return shift + detail::digamma_asymptotic(x);
}

// psi'(x) for x > 0, same lift-then-series scheme via
// psi'(x) = psi'(x+1) + 1/x^2.
inline double trigamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("trigamma: requires x > 0");
    double shift = 0.0;
    while (x < 10.0) {
        shift += 1.0 / (x * x);
        x += 1.0;
    }
    return shift + detail::trigamma_asymptotic(x);
}

// ln[ C(n,i) p^i (1-p)^(n-i) ] through lgamma, stable up to n ~ 1e6.
// p = 0 or 1 degenerates to a point mass: 0 for the certain outcome,
// -inf otherwise.
inline double log_binomial_pmf(long i, long n_trials, double p) {
    if (n_trials < 0 || i < 0 || i > n_trials)
        throw std::domain_error("log_binomial_pmf: requires 0 <= i <= n_trials");
    if (!(p >= 0.0 && p <= 1.0))
        throw std::domain_error("log_binomial_pmf: requires p in [0,1]");
    const double inf = std::numeric_limits<double>::infinity();
    if (p == 0.0) return i == 0 ? 0.0 : -inf;
    if (p == 1.0) return i == n_trials ? 0.0 : -inf;
    const double di = static_cast<double>(i);
    const double dn = static_cast<double>(n_trials);
    const double log_choose =
        std::lgamma(dn + 1.0) - std::lgamma(di + 1.0) - std::lgamma(dn - di + 1.0);
    return log_choose + di * std::log(p) + (dn - di) * std::log1p(-p);
}

} // namespace aurc
