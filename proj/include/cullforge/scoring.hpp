#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cullforge/core.hpp"
#include "cullforge/errors.hpp"

namespace cullforge {

// Per-detection difficulty of a prediction with confidence x:
//
//   L(x) = -x ln(x) * Q + (1 - x) * e^x / (e^x + 1) + b
//
// with x ln(x) taken as 0 at x = 0. Mid-confidence detections score
// highest; a fully confident one still contributes b, so the summed
// frame loss grows with object count.
inline double confidence_loss(double x, double q_weight, double b_offset) {
    if (!(x >= 0.0 && x <= 1.0))
        throw CullError(Errc::domain_error, "confidence must be in [0,1]");
    const double nll = x > 0.0 ? -x * std::log(x) * q_weight : 0.0;
    const double ex = std::exp(x);
    return nll + (1.0 - x) * ex / (ex + 1.0) + b_offset;
}

// Shannon entropy of a Bernoulli(x), in nats. Baseline scorer.
inline double binary_entropy(double x) {
    if (!(x >= 0.0 && x <= 1.0))
        throw CullError(Errc::domain_error, "confidence must be in [0,1]");
    double h = 0.0;
    if (x > 0.0) h -= x * std::log(x);
    if (x < 1.0) h -= (1.0 - x) * std::log(1.0 - x);
    return h;
}

struct DifficultyScorer {
    enum class Kind { ConfidenceLoss, BinaryEntropy };

    Kind kind = Kind::ConfidenceLoss;
    double q_weight = 3.0;
    double b_offset = 0.5;

    static DifficultyScorer confidence(double q, double b) {
        return DifficultyScorer{Kind::ConfidenceLoss, q, b};
    }
    static DifficultyScorer entropy() {
        return DifficultyScorer{Kind::BinaryEntropy, 0.0, 0.0};
    }

    double operator()(double score) const {
        return kind == Kind::ConfidenceLoss
                   ? confidence_loss(score, q_weight, b_offset)
                   : binary_entropy(score);
    }
};

// Sum of per-detection difficulties; 0 for a frame with no detections.
inline double frame_difficulty(const FrameDetections& f, const DifficultyScorer& scorer) {
    double total = 0.0;
    for (const auto& d : f.detections) total += scorer(d.score);
    return total;
}

using FrameScore = std::pair<std::string, double>;

// Hardest-first ordering: difficulty descending, ties by id ascending.
inline bool harder_than(const FrameScore& a, const FrameScore& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
}

// Deterministic full ranking of (frame_id, difficulty) pairs.
inline std::vector<FrameScore> rank_frames(std::vector<FrameScore> difficulties) {
    std::unordered_set<std::string> seen;
    seen.reserve(difficulties.size());
    for (const auto& [id, _] : difficulties) {
        if (!seen.insert(id).second)
            throw CullError(Errc::duplicate_frame_id, "duplicate frame_id: " + id);
    }
    std::sort(difficulties.begin(), difficulties.end(), harder_than);
    return difficulties;
}

} // namespace cullforge
