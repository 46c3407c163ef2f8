#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cullforge/errors.hpp"

namespace cullforge {

// Axis-aligned box, top-left origin, full-resolution pixel units.
// Frames evaluated at a reduced scale still report boxes in these
// coordinates, so losses and IoUs are comparable across scales.
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const { return w * h; }

    bool valid() const {
        return w > 0.0 && h > 0.0 && std::isfinite(x) && std::isfinite(y) &&
               std::isfinite(w) && std::isfinite(h);
    }
};

// One predicted object.
struct Detection {
    int class_id = 0;
    BoundingBox bbox;
    double score = 0.0; // prediction confidence in [0,1]
};

enum class Source { Student, Teacher };

inline const char* to_string(Source s) {
    return s == Source::Student ? "student" : "teacher";
}

// All detections for one image at one resolution scale from one model.
struct FrameDetections {
    std::string frame_id;
    Source source = Source::Student;
    double scale = 1.0; // resolution multiplier applied before inference
    std::vector<Detection> detections;
};

// Every tunable of the culling pipeline.
struct CullConfig {
    double q_weight = 3.0;   // low-confidence weighting Q
    double b_offset = 0.5;   // per-detection constant b
    std::size_t stage1_keep = 1536; // survivors of the confidence stage
    std::size_t target_n = 256;     // final culled dataset size
    double iou_threshold = 0.5;
    double scale_step = 0.9;
    double min_scale = 0.3;
    // Per-frame MSE tolerance; the sweep compares against
    // mse_threshold * N where N is the culled dataset size.
    double mse_threshold = 0.05;
    // Raw detections below this score never enter scoring; region-proposal
    // detectors emit piles of near-zero boxes that would swamp the loss sum.
    double score_floor = 0.05;

    static CullConfig with_target(std::size_t target) {
        CullConfig c;
        c.target_n = target;
        c.stage1_keep = target * 6; // paper-shaped default: stage 2 culls 6x
        return c;
    }
};

inline void validate_config(const CullConfig& c) {
    auto fail = [](const std::string& msg) {
        throw CullError(Errc::invalid_config, msg);
    };
    if (c.q_weight < 0.0 || !std::isfinite(c.q_weight)) fail("q_weight must be >= 0");
    if (!std::isfinite(c.b_offset)) fail("b_offset must be finite");
    if (c.stage1_keep == 0) fail("stage1_keep must be positive");
    if (c.target_n == 0) fail("target_n must be positive");
    if (c.target_n > c.stage1_keep) fail("target_n must not exceed stage1_keep");
    if (!(c.iou_threshold > 0.0 && c.iou_threshold < 1.0)) fail("iou_threshold must be in (0,1)");
    if (!(c.scale_step > 0.0 && c.scale_step < 1.0)) fail("scale_step must be in (0,1)");
    if (!(c.min_scale > 0.0 && c.min_scale < 1.0)) fail("min_scale must be in (0,1)");
    if (!(c.mse_threshold >= 0.0) || !std::isfinite(c.mse_threshold)) fail("mse_threshold must be >= 0");
    if (!(c.score_floor >= 0.0 && c.score_floor < 1.0)) fail("score_floor must be in [0,1)");
}

struct ManifestEntry {
    std::string frame_id;
    double difficulty = 0.0;
};

// The culled dataset: kept frames ordered hardest first, plus the
// resolution scale chosen for them.
struct Manifest {
    std::vector<ManifestEntry> entries; // difficulty desc, ties by id asc
    double chosen_scale = 1.0;
    CullConfig config_snapshot;
    std::size_t source_count = 0; // original stream size
    // Set when stage 1 produced fewer survivors than target_n.
    bool under_filled = false;

    std::vector<std::string> frame_ids() const {
        std::vector<std::string> ids;
        ids.reserve(entries.size());
        for (const auto& e : entries) ids.push_back(e.frame_id);
        return ids;
    }
};

// Intersection-over-union of two valid boxes; 0 when disjoint.
// Callers must hand in boxes with positive extent (see validate_frame).
inline double iou(const BoundingBox& a, const BoundingBox& b) {
    const double ix = std::max(a.x, b.x);
    const double iy = std::max(a.y, b.y);
    const double ix2 = std::min(a.x + a.w, b.x + b.w);
    const double iy2 = std::min(a.y + a.h, b.y + b.h);
    const double iw = ix2 - ix;
    const double ih = iy2 - iy;
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

// Checks all frame invariants and drops detections scored below the
// floor. Detection order is preserved.
inline FrameDetections validate_frame(FrameDetections f, double score_floor = 0.0) {
    if (f.frame_id.empty())
        throw CullError(Errc::empty_frame_id, "frame_id must be nonempty");
    if (!(f.scale > 0.0 && f.scale <= 1.0))
        throw CullError(Errc::invalid_scale,
                        "frame " + f.frame_id + ": scale must be in (0,1]");
    for (const auto& d : f.detections) {
        if (!d.bbox.valid())
            throw CullError(Errc::invalid_box,
                            "frame " + f.frame_id + ": box needs positive w/h and finite coords");
        if (!(d.score >= 0.0 && d.score <= 1.0))
            throw CullError(Errc::invalid_score,
                            "frame " + f.frame_id + ": score outside [0,1]");
    }
    if (score_floor > 0.0) {
        std::erase_if(f.detections,
                      [&](const Detection& d) { return d.score < score_floor; });
    }
    return f;
}

} // namespace cullforge
