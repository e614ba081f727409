#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "aurc/estimators.hpp"
#include "aurc/numeric.hpp"
#include "aurc/ranking.hpp"
#include "aurc/rng.hpp"

namespace aurc {

enum class LossModelKind { bernoulli_decreasing, deterministic_threshold, user_table };

// How per-sample losses are generated from the percentile beta.
struct LossModel {
    LossModelKind kind = LossModelKind::bernoulli_decreasing;
    double gamma = 1.0;     // P(loss = 1) = 1 - beta^gamma
    double threshold = 0.5; // loss = 1 iff beta < threshold
    std::vector<double> table;

    static LossModel bernoulli(double gamma) {
        if (!(gamma > 0.0)) throw std::invalid_argument("LossModel: requires gamma > 0");
        LossModel m;
        m.kind = LossModelKind::bernoulli_decreasing;
        m.gamma = gamma;
        return m;
    }

    static LossModel deterministic(double threshold) {
        if (!(threshold >= 0.0 && threshold <= 1.0))
            throw std::invalid_argument("LossModel: requires threshold in [0,1]");
        LossModel m;
        m.kind = LossModelKind::deterministic_threshold;
        m.threshold = threshold;
        return m;
    }

    static LossModel from_table(std::vector<double> losses) {
        LossModel m;
        m.kind = LossModelKind::user_table;
        m.table = std::move(losses);
        return m;
    }
};

struct SyntheticPopulation {
    std::vector<double> percentiles; // ascending, distinct, in (0,1)
    std::vector<double> scores;      // strictly increasing with percentile
    std::vector<double> losses;

    std::size_t size() const { return percentiles.size(); }

    PopulationSpec spec() const { return PopulationSpec{percentiles, losses}; }
};

// Stratified jittered percentiles (i + u_i)/N stay distinct and close
// to uniform; the identity map serves as the confidence score.
inline SyntheticPopulation generate_population(const LossModel& model, std::size_t n_samples,
                                               RngHandle& rng) {
    if (n_samples < 2)
        throw std::invalid_argument("generate_population: requires N >= 2");
    if (model.kind == LossModelKind::user_table && model.table.size() != n_samples)
        throw std::invalid_argument("generate_population: loss table size mismatch");
    SyntheticPopulation pop;
    pop.percentiles.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i)
        pop.percentiles[i] =
            (static_cast<double>(i) + rng.uniform()) / static_cast<double>(n_samples);
    pop.scores = pop.percentiles;
    pop.losses.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double beta = pop.percentiles[i];
        switch (model.kind) {
            case LossModelKind::bernoulli_decreasing:
                pop.losses[i] =
                    rng.uniform() < 1.0 - std::pow(beta, model.gamma) ? 1.0 : 0.0;
                break;
            case LossModelKind::deterministic_threshold:
                pop.losses[i] = beta < model.threshold ? 1.0 : 0.0;
                break;
            case LossModelKind::user_table: {
                const double l = model.table[i];
                if (!(l >= 0.0) || !std::isfinite(l))
                    throw std::invalid_argument(
                        "generate_population: table losses must be finite and >= 0");
                pop.losses[i] = l;
                break;
            }
        }
    }
    return pop;
}

struct Batch {
    std::vector<double> scores;
    std::vector<double> losses;
};

// Fisher-Yates permutation, contiguous chunks, remainder dropped.
inline std::vector<Batch> batch_split(std::span<const double> scores,
                                      std::span<const double> losses,
                                      std::size_t batch_size, RngHandle& rng) {
    const std::size_t n = scores.size();
    if (losses.size() != n)
        throw std::invalid_argument("batch_split: scores/losses size mismatch");
    if (batch_size == 0) throw std::invalid_argument("batch_split: batch_size must be > 0");
    if (batch_size > n)
        throw std::invalid_argument("batch_split: batch_size exceeds population");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(perm[i - 1], perm[j]);
    }
    const std::size_t n_batches = n / batch_size;
    std::vector<Batch> batches(n_batches);
    for (std::size_t b = 0; b < n_batches; ++b) {
        auto& batch = batches[b];
        batch.scores.resize(batch_size);
        batch.losses.resize(batch_size);
        for (std::size_t k = 0; k < batch_size; ++k) {
            const std::size_t idx = perm[b * batch_size + k];
            batch.scores[k] = scores[idx];
            batch.losses[k] = losses[idx];
        }
    }
    return batches;
}

inline std::vector<Batch> batch_split(const SyntheticPopulation& pop,
                                      std::size_t batch_size, RngHandle& rng) {
    return batch_split(pop.scores, pop.losses, batch_size, rng);
}

namespace detail {

// Runs fn(i) for i in [0, count); partitions across threads with
// results keyed by index, so the schedule cannot affect any output.
inline void parallel_for_index(std::size_t count, unsigned threads,
                               const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(count));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t i = w; i < count; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace detail

struct ConvergenceRow {
    std::size_t batch_size = 0;
    EstimatorKind estimator = EstimatorKind::plugin_alpha_hat;
    double mean = 0.0;
    double stddev = 0.0;
    double mae = 0.0;
    double mse = 0.0;
    std::size_t n_batches = 0;
};

struct ConvergenceTable {
    double population_value = 0.0;
    std::vector<ConvergenceRow> rows;
    // ln MAE regressed on ln sqrt(ln n / n), one slope per estimator.
    std::vector<std::pair<EstimatorKind, double>> rate_slopes;
};

// The batch-size sweep: split the data into batches of each size
// (reps independent shuffles), evaluate every requested estimator on
// every batch, and summarize against the reference value.
inline ConvergenceTable convergence_study(std::span<const double> scores,
                                          std::span<const double> losses,
                                          double reference_value,
                                          std::span<const std::size_t> sizes,
                                          std::span<const EstimatorKind> estimators,
                                          const RngHandle& rng, std::size_t reps = 5,
                                          unsigned threads = 1,
                                          TiePolicy tie_policy = TiePolicy::stable) {
    if (sizes.empty() || estimators.empty())
        throw std::invalid_argument("convergence_study: empty sizes or estimators");
    if (reps < 1) throw std::invalid_argument("convergence_study: requires reps >= 1");
    ConvergenceTable table;
    table.population_value = reference_value;
    const HarmonicTable harmonic = harmonic_prefix(
        *std::max_element(sizes.begin(), sizes.end()));
    for (std::size_t size_idx = 0; size_idx < sizes.size(); ++size_idx) {
        const std::size_t n = sizes[size_idx];
        std::vector<Batch> batches;
        for (std::size_t rep = 0; rep < reps; ++rep) {
            RngHandle split_rng =
                rng.derive(size_idx * 1000003ULL + rep);
            auto chunk = batch_split(scores, losses, n, split_rng);
            for (auto& b : chunk) batches.push_back(std::move(b));
        }
        std::vector<std::vector<double>> values(
            estimators.size(), std::vector<double>(batches.size()));
        detail::parallel_for_index(
            batches.size(), threads, [&](std::size_t b) {
                const auto& batch = batches[b];
                for (std::size_t e = 0; e < estimators.size(); ++e) {
                    values[e][b] = evaluate_estimator(estimators[e], batch.losses,
                                                      batch.scores, tie_policy, harmonic)
                                       .value;
                }
            });
        for (std::size_t e = 0; e < estimators.size(); ++e) {
            ConvergenceRow row;
            row.batch_size = n;
            row.estimator = estimators[e];
            row.n_batches = batches.size();
            row.mean = mean(values[e]);
            row.stddev = sample_stddev(values[e]);
            CompensatedSum abs_err, sq_err;
            for (double v : values[e]) {
                abs_err.add(std::abs(v - table.population_value));
                sq_err.add((v - table.population_value) * (v - table.population_value));
            }
            row.mae = abs_err.value() / static_cast<double>(batches.size());
            row.mse = sq_err.value() / static_cast<double>(batches.size());
            table.rows.push_back(row);
        }
    }
    if (sizes.size() >= 2) {
        for (std::size_t e = 0; e < estimators.size(); ++e) {
            std::vector<double> xs, ys;
            for (const auto& row : table.rows) {
                if (row.estimator != estimators[e] || row.mae <= 0.0) continue;
                const double dn = static_cast<double>(row.batch_size);
                xs.push_back(std::log(std::sqrt(std::log(dn) / dn)));
                ys.push_back(std::log(row.mae));
            }
            if (xs.size() >= 2)
                table.rate_slopes.emplace_back(estimators[e], fit_line(xs, ys).slope);
        }
    }
    return table;
}

// Synthetic-population entry point; the reference is the exact
// percentile-weighted value.
inline ConvergenceTable convergence_study(const SyntheticPopulation& pop,
                                          std::span<const std::size_t> sizes,
                                          std::span<const EstimatorKind> estimators,
                                          const RngHandle& rng, std::size_t reps = 5,
                                          unsigned threads = 1) {
    return convergence_study(pop.scores, pop.losses, population_aurc(pop.spec()), sizes,
                             estimators, rng, reps, threads);
}

struct CounterexampleReport {
    double top_weight = 0.0;       // H_5 - H_0
    double plugin_alpha_hat = 0.0; // H_5 * L / 5
    double sele = 0.0;             // L / 5
    double sele_times_two = 0.0;
    bool upper_bound_violated = false;
};

// Five samples, all loss on the most confident one: the doubled r/n
// score falls strictly below the plug-in value, refuting the claimed
// upper bound.
inline CounterexampleReport counterexample_demo(double top_loss = 1.0) {
    if (!(top_loss >= 0.0))
        throw std::invalid_argument("counterexample_demo: requires top_loss >= 0");
    const std::vector<double> scores{0.1, 0.2, 0.3, 0.4, 0.5};
    const std::vector<double> losses{0.0, 0.0, 0.0, 0.0, top_loss};
    const HarmonicTable table = harmonic_prefix(5);
    CounterexampleReport report;
    report.top_weight = table[5] - table[0];
    report.plugin_alpha_hat =
        plugin_aurc(losses, scores, WeightKind::alpha_hat, TiePolicy::stable, table).value;
    report.sele = sele_score(losses, scores).value;
    report.sele_times_two = 2.0 * report.sele;
    report.upper_bound_violated = report.plugin_alpha_hat > report.sele_times_two;
    return report;
}

struct EquivalenceReport {
    double rank_weighted = 0.0;       // empirical-rank route
    double percentile_weighted = 0.0; // true-percentile route
    double abs_gap = 0.0;
    double rel_gap = 0.0;
};

// Both routes converge to the same value on a large population: the
// empirical form through ranks vs the direct form through the known
// percentiles.
inline EquivalenceReport equivalence_check(const SyntheticPopulation& pop) {
    EquivalenceReport report;
    report.rank_weighted = plugin_aurc(pop.losses, pop.scores, WeightKind::alpha_hat,
                                       TiePolicy::stable, harmonic_prefix(pop.size()))
                               .value;
    report.percentile_weighted = population_aurc(pop.spec());
    report.abs_gap = std::abs(report.rank_weighted - report.percentile_weighted);
    report.rel_gap = report.percentile_weighted != 0.0
                         ? report.abs_gap / std::abs(report.percentile_weighted)
                         : report.abs_gap;
    return report;
}

} // namespace aurc
