#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aurc {

struct LogitsRecord {
    std::vector<double> logits;
    int label = 0;
};

inline void validate_record(const LogitsRecord& rec) {
    if (rec.logits.size() < 2)
        throw std::invalid_argument("LogitsRecord: needs at least 2 classes");
    if (rec.label < 0 || static_cast<std::size_t>(rec.label) >= rec.logits.size())
        throw std::invalid_argument("LogitsRecord: label out of range");
    for (double z : rec.logits)
        if (!std::isfinite(z))
            throw std::invalid_argument("LogitsRecord: non-finite logit");
}

enum class LossKind { zero_one, cross_entropy };

enum class CsfKind {
    msp,
    max_logit,
    softmax_margin,
    neg_entropy,
    max_logit_p_norm,
    neg_gini,
};

inline std::string to_string(LossKind k) {
    return k == LossKind::zero_one ? "zero_one" : "cross_entropy";
}

inline std::string to_string(CsfKind k) {
    switch (k) {
        case CsfKind::msp: return "msp";
        case CsfKind::max_logit: return "max_logit";
        case CsfKind::softmax_margin: return "softmax_margin";
        case CsfKind::neg_entropy: return "neg_entropy";
        case CsfKind::max_logit_p_norm: return "max_logit_p_norm";
        case CsfKind::neg_gini: return "neg_gini";
    }
    throw std::invalid_argument("unknown CsfKind");
}

inline double log_sum_exp(std::span<const double> xs) {
    const double m = *std::max_element(xs.begin(), xs.end());
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - m);
    return m + std::log(acc);
}

// Max-subtracted softmax; order preserving, sums to 1.
inline std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw std::invalid_argument("softmax: empty logits");
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - m);
        total += probs[i];
    }
    for (auto& p : probs) p /= total;
    return probs;
}

// 0 iff argmax(logits) == label; argmax ties go to the lowest index.
inline double zero_one_loss(const LogitsRecord& rec) {
    validate_record(rec);
    std::size_t best = 0;
    for (std::size_t i = 1; i < rec.logits.size(); ++i)
        if (rec.logits[i] > rec.logits[best]) best = i;
    return best == static_cast<std::size_t>(rec.label) ? 0.0 : 1.0;
}

// -ln softmax(z)[label] through log-sum-exp; probabilities are never
// materialized.
inline double cross_entropy_loss(const LogitsRecord& rec) {
    validate_record(rec);
    return log_sum_exp(rec.logits) - rec.logits[static_cast<std::size_t>(rec.label)];
}

inline double sample_loss(const LogitsRecord& rec, LossKind kind) {
    return kind == LossKind::zero_one ? zero_one_loss(rec) : cross_entropy_loss(rec);
}

// Confidence score of a record. p applies only to max_logit_p_norm.
// Entropy is taken over softmax probabilities.
inline double confidence_score(const LogitsRecord& rec, CsfKind kind, double p = 2.0) {
    validate_record(rec);
    switch (kind) {
        case CsfKind::msp: {
            const auto probs = softmax(rec.logits);
            return *std::max_element(probs.begin(), probs.end());
        }
        case CsfKind::max_logit:
            return *std::max_element(rec.logits.begin(), rec.logits.end());
        case CsfKind::softmax_margin: {
            const auto probs = softmax(rec.logits);
            std::size_t top = 0;
            for (std::size_t i = 1; i < probs.size(); ++i)
                if (probs[i] > probs[top]) top = i;
            double runner_up = -1.0;
            for (std::size_t i = 0; i < probs.size(); ++i)
                if (i != top) runner_up = std::max(runner_up, probs[i]);
            return probs[top] - runner_up;
        }
        case CsfKind::neg_entropy: {
            const auto probs = softmax(rec.logits);
            double acc = 0.0;
            for (double q : probs)
                if (q > 0.0) acc += q * std::log(q);
            return acc;
        }
        case CsfKind::max_logit_p_norm: {
            if (!(p > 0.0))
                throw std::domain_error("confidence_score: requires p > 0");
            double acc = 0.0;
            for (double z : rec.logits) acc += std::pow(std::abs(z), p);
            return std::pow(acc, 1.0 / p);
        }
        case CsfKind::neg_gini: {
            const auto probs = softmax(rec.logits);
            double acc = -1.0;
            for (double q : probs) acc += q * q;
            return acc;
        }
    }
    throw std::invalid_argument("unknown CsfKind");
}

} // namespace aurc
