#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "cullforge/core.hpp"
#include "cullforge/errors.hpp"

namespace cullforge {

struct MatchPair {
    std::size_t prediction_index = 0;
    std::size_t groundtruth_index = 0;
    double iou = 0.0;
};

struct MatchResult {
    std::vector<MatchPair> pairs;
    std::vector<std::size_t> unmatched_predictions;
    std::vector<std::size_t> unmatched_groundtruths;
};

// Prediction order used everywhere AP is involved: score descending,
// ties broken by input index so results never depend on sort internals.
inline std::vector<std::size_t> rank_by_score(const std::vector<Detection>& preds) {
    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return preds[a].score > preds[b].score;
    });
    return order;
}

// Greedy one-to-one matching. Predictions are visited hardest-claim-first
// (descending score); each takes the unmatched same-class ground truth of
// highest IoU >= threshold, lowest index on IoU ties.
inline MatchResult match_greedy(const std::vector<Detection>& predictions,
                                const std::vector<Detection>& groundtruths,
                                double iou_threshold) {
    MatchResult result;
    std::vector<bool> gt_taken(groundtruths.size(), false);

    for (std::size_t pi : rank_by_score(predictions)) {
        const Detection& p = predictions[pi];
        double best_iou = 0.0;
        std::size_t best_gt = groundtruths.size();
        for (std::size_t gi = 0; gi < groundtruths.size(); ++gi) {
            if (gt_taken[gi] || groundtruths[gi].class_id != p.class_id) continue;
            const double v = iou(p.bbox, groundtruths[gi].bbox);
            if (v >= iou_threshold && v > best_iou) {
                best_iou = v;
                best_gt = gi;
            }
        }
        if (best_gt < groundtruths.size()) {
            gt_taken[best_gt] = true;
            result.pairs.push_back({pi, best_gt, best_iou});
        } else {
            result.unmatched_predictions.push_back(pi);
        }
    }
    for (std::size_t gi = 0; gi < groundtruths.size(); ++gi)
        if (!gt_taken[gi]) result.unmatched_groundtruths.push_back(gi);
    return result;
}

// All-point interpolated average precision (PASCAL 2010 style): walk the
// score-ranked predictions, mark TP/FP by greedy matching, then integrate
// delta-recall times the max precision at or beyond each recall level.
// Conventions: both lists empty -> 1.0 (nothing to get wrong); otherwise
// an empty side -> 0.0.
inline double average_precision(const std::vector<Detection>& predictions,
                                const std::vector<Detection>& groundtruths,
                                double iou_threshold) {
    if (groundtruths.empty()) return predictions.empty() ? 1.0 : 0.0;
    if (predictions.empty()) return 0.0;

    const MatchResult match = match_greedy(predictions, groundtruths, iou_threshold);
    std::vector<bool> is_tp(predictions.size(), false);
    for (const auto& pair : match.pairs) is_tp[pair.prediction_index] = true;

    const std::vector<std::size_t> order = rank_by_score(predictions);
    const std::size_t n = order.size();
    std::vector<double> precision(n), recall(n);
    std::size_t tp = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (is_tp[order[k]]) ++tp;
        precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
        recall[k] = static_cast<double>(tp) / static_cast<double>(groundtruths.size());
    }
    // Interpolate: precision at recall r becomes max precision at >= r.
    for (std::size_t k = n - 1; k-- > 0;)
        precision[k] = std::max(precision[k], precision[k + 1]);

    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (recall[k] > prev_recall) {
            ap += (recall[k] - prev_recall) * precision[k];
            prev_recall = recall[k];
        }
    }
    return ap;
}

// Unweighted mean over the classes present in the ground truth.
inline double mean_ap(const std::vector<std::pair<int, double>>& per_class_aps) {
    if (per_class_aps.empty())
        throw CullError(Errc::empty_class_set, "mean_ap over an empty class set");
    double sum = 0.0;
    for (const auto& [_, ap] : per_class_aps) sum += ap;
    return sum / static_cast<double>(per_class_aps.size());
}

struct PrecisionDifficulty {
    std::string frame_id;
    double average_precision = 1.0;
    std::size_t student_count = 0;
    std::size_t teacher_count = 0;

    double difficulty() const { return 1.0 - average_precision; }
};

// Stage-2 difficulty: AP of the student frame with the teacher's
// detections treated as ground truth, pooled over all classes in one
// ranked list (matching itself never crosses classes).
inline PrecisionDifficulty frame_precision_difficulty(const FrameDetections& student,
                                                      const FrameDetections& teacher,
                                                      double iou_threshold) {
    if (student.frame_id != teacher.frame_id)
        throw CullError(Errc::frame_id_mismatch,
                        "student frame " + student.frame_id +
                            " vs teacher frame " + teacher.frame_id);
    PrecisionDifficulty out;
    out.frame_id = student.frame_id;
    out.student_count = student.detections.size();
    out.teacher_count = teacher.detections.size();
    out.average_precision =
        average_precision(student.detections, teacher.detections, iou_threshold);
    return out;
}

} // namespace cullforge
