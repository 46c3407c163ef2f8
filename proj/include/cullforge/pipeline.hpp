#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cullforge/adapters.hpp"
#include "cullforge/core.hpp"
#include "cullforge/errors.hpp"
#include "cullforge/metrics.hpp"
#include "cullforge/optres.hpp"
#include "cullforge/scoring.hpp"
#include "cullforge/topk.hpp"

namespace cullforge {

// Table-2 culling strategies. stride 0 means "derive from stream length".
struct Strategy {
    enum class Kind { Intermittent, Entropy, Confidence, Precision, ConfidencePlusPrecision };

    Kind kind = Kind::ConfidencePlusPrecision;
    std::size_t stride = 0;

    static Strategy intermittent(std::size_t stride = 0) {
        return Strategy{Kind::Intermittent, stride};
    }
    static Strategy entropy() { return Strategy{Kind::Entropy, 0}; }
    static Strategy confidence() { return Strategy{Kind::Confidence, 0}; }
    static Strategy precision() { return Strategy{Kind::Precision, 0}; }
    static Strategy confidence_plus_precision() {
        return Strategy{Kind::ConfidencePlusPrecision, 0};
    }
};

inline const char* to_string(Strategy::Kind k) {
    switch (k) {
        case Strategy::Kind::Intermittent: return "intermittent";
        case Strategy::Kind::Entropy: return "entropy";
        case Strategy::Kind::Confidence: return "confidence";
        case Strategy::Kind::Precision: return "precision";
        case Strategy::Kind::ConfidencePlusPrecision: return "confidence+precision";
    }
    return "?";
}

// What each stage did to the stream, for reduction accounting.
struct StageTrace {
    std::size_t input_count = 0;
    std::vector<std::string> stage1_survivors;
    std::vector<std::string> stage2_survivors;
    std::pair<double, double> per_stage_reduction{1.0, 1.0};
};

struct PipelineOptions {
    bool opt_resolution = false;
    unsigned threads = 1;
};

struct PipelineResult {
    Manifest manifest;
    StageTrace trace;
};

namespace detail {

// Guards the whole-stream uniqueness contract. Deliberately O(n) in ids
// while everything else stays O(keep_n); an id set is the only way to
// report duplicates from a single pass.
class FrameIdGuard {
public:
    void check(const std::string& id) {
        if (!seen_.insert(id).second)
            throw CullError(Errc::duplicate_frame_id, "duplicate frame_id: " + id);
    }

private:
    std::unordered_set<std::string> seen_;
};

} // namespace detail

// Confidence-stage cull over a pull source of frames: keeps the keep_n
// hardest frames in one pass with a bounded heap. `next()` returns
// std::optional<FrameDetections>, empty when the stream ends.
template <typename Source>
std::vector<FrameScore> cull_stage1(Source&& next, const DifficultyScorer& scorer,
                                    std::size_t keep_n, double score_floor = 0.0) {
    detail::FrameIdGuard guard;
    TopK<FrameScore, bool (*)(const FrameScore&, const FrameScore&)> heap(keep_n, &harder_than);
    while (auto frame = next()) {
        guard.check(frame->frame_id);
        const FrameDetections valid = validate_frame(std::move(*frame), score_floor);
        heap.push({valid.frame_id, frame_difficulty(valid, scorer)});
    }
    return heap.take_sorted();
}

// Same cull driven by frame ids and a detector adapter; scoring runs in
// index-chunked batches so it can parallelize without changing the result.
template <DetectorAdapter A>
std::vector<FrameScore> cull_stage1_ids(const std::vector<std::string>& frame_ids,
                                        const A& student, const DifficultyScorer& scorer,
                                        std::size_t keep_n, double score_floor = 0.0,
                                        unsigned threads = 1) {
    detail::FrameIdGuard guard;
    TopK<FrameScore, bool (*)(const FrameScore&, const FrameScore&)> heap(keep_n, &harder_than);
    constexpr std::size_t kChunk = 2048;
    std::vector<double> difficulties;
    for (std::size_t base = 0; base < frame_ids.size(); base += kChunk) {
        const std::size_t count = std::min(kChunk, frame_ids.size() - base);
        difficulties.assign(count, 0.0);
        parallel_for(count, threads, [&](std::size_t i) {
            const FrameDetections f =
                validate_frame(student.detect(frame_ids[base + i], 1.0), score_floor);
            difficulties[i] = frame_difficulty(f, scorer);
        });
        for (std::size_t i = 0; i < count; ++i) {
            guard.check(frame_ids[base + i]);
            heap.push({frame_ids[base + i], difficulties[i]});
        }
    }
    return heap.take_sorted();
}

// Precision-stage cull: re-rank stage-1 survivors by 1 - AP against the
// teacher and keep the hardest target_n. Lookups return empty optionals
// for frames they cannot serve.
template <typename StudentLookup, typename TeacherLookup>
std::vector<FrameScore> cull_stage2(const std::vector<std::string>& candidates,
                                    StudentLookup&& student, TeacherLookup&& teacher,
                                    double iou_threshold, std::size_t target_n,
                                    unsigned threads = 1) {
    std::vector<FrameScore> scored(candidates.size());
    parallel_for(candidates.size(), threads, [&](std::size_t i) {
        const std::string& id = candidates[i];
        std::optional<FrameDetections> s = student(id);
        if (!s)
            throw CullError(Errc::missing_detections, "no student detections for frame " + id);
        std::optional<FrameDetections> t = teacher(id);
        if (!t)
            throw CullError(Errc::missing_teacher_frame, "no teacher detections for frame " + id);
        const PrecisionDifficulty pd =
            frame_precision_difficulty(*s, *t, iou_threshold);
        scored[i] = {id, pd.difficulty()};
    });
    std::sort(scored.begin(), scored.end(), harder_than);
    if (scored.size() > target_n) scored.resize(target_n);
    return scored;
}

// The full two-stage cull of the stream, optionally followed by the
// resolution sweep. The teacher adapter is consulted exactly once per
// stage-1 survivor and never for anything else.
template <DetectorAdapter S, DetectorAdapter T>
PipelineResult run_pipeline(const CullConfig& config, const S& student, const T& teacher,
                            const std::vector<std::string>& frame_ids,
                            const PipelineOptions& opts = {}) {
    validate_config(config);
    if (frame_ids.empty())
        throw CullError(Errc::empty_stream, "pipeline input stream is empty");

    const DifficultyScorer scorer =
        DifficultyScorer::confidence(config.q_weight, config.b_offset);

    const std::vector<FrameScore> stage1 = cull_stage1_ids(
        frame_ids, student, scorer, config.stage1_keep, config.score_floor, opts.threads);

    std::vector<std::string> candidates;
    candidates.reserve(stage1.size());
    for (const auto& [id, _] : stage1) candidates.push_back(id);

    auto student_lookup = [&](const std::string& id) -> std::optional<FrameDetections> {
        return validate_frame(student.detect(id, 1.0), config.score_floor);
    };
    auto teacher_lookup = [&](const std::string& id) -> std::optional<FrameDetections> {
        return validate_frame(teacher.detect(id, 1.0), config.score_floor);
    };
    const std::vector<FrameScore> stage2 =
        cull_stage2(candidates, student_lookup, teacher_lookup, config.iou_threshold,
                    config.target_n, opts.threads);

    PipelineResult result;
    result.manifest.entries.reserve(stage2.size());
    for (const auto& [id, difficulty] : stage2)
        result.manifest.entries.push_back({id, difficulty});
    result.manifest.config_snapshot = config;
    result.manifest.source_count = frame_ids.size();
    result.manifest.under_filled = stage1.size() < config.target_n;
    result.manifest.chosen_scale = 1.0;
    if (opts.opt_resolution) {
        const ScaleSweep sweep = sweep_scales(
            result.manifest, student, scorer, config.scale_step, config.min_scale,
            config.score_floor, total_mse_threshold(config, result.manifest.entries.size()),
            opts.threads);
        result.manifest.chosen_scale =
            choose_scale(sweep, total_mse_threshold(config, result.manifest.entries.size()));
    }

    result.trace.input_count = frame_ids.size();
    result.trace.stage1_survivors = std::move(candidates);
    for (const auto& e : result.manifest.entries)
        result.trace.stage2_survivors.push_back(e.frame_id);
    result.trace.per_stage_reduction = {
        static_cast<double>(frame_ids.size()) /
            static_cast<double>(result.trace.stage1_survivors.size()),
        static_cast<double>(result.trace.stage1_survivors.size()) /
            static_cast<double>(result.trace.stage2_survivors.size())};
    return result;
}

// One manifest per Table-2 strategy. Intermittent touches no model at
// all; Entropy/Confidence run only the student; Precision runs the
// teacher over the whole stream; ConfidencePlusPrecision is the pipeline.
template <DetectorAdapter S, DetectorAdapter T>
Manifest run_strategy(const Strategy& strategy, const CullConfig& config, const S& student,
                      const T& teacher, const std::vector<std::string>& frame_ids,
                      const PipelineOptions& opts = {}) {
    validate_config(config);
    if (frame_ids.empty())
        throw CullError(Errc::empty_stream, "strategy input stream is empty");

    Manifest m;
    m.config_snapshot = config;
    m.source_count = frame_ids.size();

    switch (strategy.kind) {
        case Strategy::Kind::Intermittent: {
            const std::size_t stride =
                strategy.stride > 0
                    ? strategy.stride
                    : std::max<std::size_t>(1, frame_ids.size() / config.target_n);
            for (std::size_t i = 0; i < frame_ids.size() && m.entries.size() < config.target_n;
                 i += stride)
                m.entries.push_back({frame_ids[i], 0.0});
            std::sort(m.entries.begin(), m.entries.end(),
                      [](const ManifestEntry& a, const ManifestEntry& b) {
                          return harder_than({a.frame_id, a.difficulty},
                                             {b.frame_id, b.difficulty});
                      });
            break;
        }
        case Strategy::Kind::Entropy:
        case Strategy::Kind::Confidence: {
            const DifficultyScorer scorer =
                strategy.kind == Strategy::Kind::Entropy
                    ? DifficultyScorer::entropy()
                    : DifficultyScorer::confidence(config.q_weight, config.b_offset);
            const std::vector<FrameScore> kept = cull_stage1_ids(
                frame_ids, student, scorer, config.target_n, config.score_floor, opts.threads);
            for (const auto& [id, difficulty] : kept) m.entries.push_back({id, difficulty});
            break;
        }
        case Strategy::Kind::Precision: {
            auto student_lookup = [&](const std::string& id) -> std::optional<FrameDetections> {
                return validate_frame(student.detect(id, 1.0), config.score_floor);
            };
            auto teacher_lookup = [&](const std::string& id) -> std::optional<FrameDetections> {
                return validate_frame(teacher.detect(id, 1.0), config.score_floor);
            };
            const std::vector<FrameScore> kept =
                cull_stage2(frame_ids, student_lookup, teacher_lookup, config.iou_threshold,
                            config.target_n, opts.threads);
            for (const auto& [id, difficulty] : kept) m.entries.push_back({id, difficulty});
            break;
        }
        case Strategy::Kind::ConfidencePlusPrecision:
            return run_pipeline(config, student, teacher, frame_ids, opts).manifest;
    }
    m.under_filled = m.entries.size() < config.target_n;
    return m;
}

// Fraction of b's kept frames that a also kept. Empty b overlaps fully.
inline double overlap_report(const Manifest& a, const Manifest& b) {
    if (b.entries.empty()) return 1.0;
    std::unordered_set<std::string> in_a;
    in_a.reserve(a.entries.size());
    for (const auto& e : a.entries) in_a.insert(e.frame_id);
    std::size_t shared = 0;
    for (const auto& e : b.entries) shared += in_a.count(e.frame_id);
    return static_cast<double>(shared) / static_cast<double>(b.entries.size());
}

} // namespace cullforge
