#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cullforge/adapters.hpp"
#include "cullforge/core.hpp"
#include "cullforge/errors.hpp"
#include "cullforge/scoring.hpp"

namespace cullforge {

// Confidence-loss profile of the culled dataset across a geometric grid
// of resolution scales. Row k of loss_vectors is aligned to the manifest
// entry order; scales[0] is always full resolution.
struct ScaleSweep {
    std::vector<double> scales;
    std::vector<std::vector<double>> loss_vectors;
    std::vector<double> mse_per_scale;
};

// Unnormalized sum of squared per-frame loss deviations from full
// resolution. The sum (not mean) is what the scale decision thresholds.
inline double mse_vs_fullres(const std::vector<double>& full,
                             const std::vector<double>& scaled) {
    if (full.size() != scaled.size())
        throw CullError(Errc::length_mismatch,
                        "loss vectors differ in length: " + std::to_string(full.size()) +
                            " vs " + std::to_string(scaled.size()));
    double sum = 0.0;
    for (std::size_t i = 0; i < full.size(); ++i) {
        const double d = full[i] - scaled[i];
        sum += d * d;
    }
    return sum;
}

// Evaluates the culled frames at 1.0, step, step^2, ... down to min_scale
// (inclusive), recording per-frame losses and the MSE against full
// resolution. When stop_above is set (fused mode), descent stops right
// after the first scale whose MSE exceeds it; that scale stays recorded.
template <DetectorAdapter A>
ScaleSweep sweep_scales(const Manifest& culled, const A& student,
                        const DifficultyScorer& scorer, double scale_step,
                        double min_scale, double score_floor = 0.0,
                        std::optional<double> stop_above = std::nullopt,
                        unsigned threads = 1) {
    if (!(scale_step > 0.0 && scale_step < 1.0))
        throw CullError(Errc::invalid_config, "scale_step must be in (0,1)");
    if (!(min_scale > 0.0 && min_scale < 1.0))
        throw CullError(Errc::invalid_config, "min_scale must be in (0,1)");

    ScaleSweep sweep;
    const std::size_t n = culled.entries.size();
    for (double s = 1.0; s >= min_scale; s *= scale_step) {
        std::vector<double> losses(n);
        parallel_for(n, threads, [&](std::size_t i) {
            const std::string& id = culled.entries[i].frame_id;
            try {
                FrameDetections f = validate_frame(student.detect(id, s), score_floor);
                losses[i] = frame_difficulty(f, scorer);
            } catch (const CullError& e) {
                throw CullError(e.code(), "frame " + id + " at scale " +
                                              std::to_string(s) + ": " + e.what());
            }
        });
        sweep.scales.push_back(s);
        sweep.loss_vectors.push_back(std::move(losses));
        sweep.mse_per_scale.push_back(
            sweep.scales.size() == 1
                ? 0.0
                : mse_vs_fullres(sweep.loss_vectors.front(), sweep.loss_vectors.back()));
        if (stop_above && sweep.mse_per_scale.back() > *stop_above) break;
    }
    return sweep;
}

// Smallest evaluated scale whose MSE stays within the threshold. Full
// resolution has MSE 0, so there is always a feasible answer; if the very
// first downscale already busts the budget this returns 1.0.
inline double choose_scale(const ScaleSweep& sweep, double mse_threshold) {
    if (sweep.scales.empty())
        throw CullError(Errc::invalid_config, "choose_scale on an empty sweep");
    double best = sweep.scales.front();
    for (std::size_t k = 0; k < sweep.scales.size(); ++k) {
        if (sweep.mse_per_scale[k] <= mse_threshold && sweep.scales[k] < best)
            best = sweep.scales[k];
    }
    return best;
}

// The config's mse_threshold is a per-frame tolerance; the sweep's MSE is
// a sum over the culled set, so the working threshold scales with N.
inline double total_mse_threshold(const CullConfig& config, std::size_t culled_size) {
    return config.mse_threshold * static_cast<double>(culled_size);
}

} // namespace cullforge
