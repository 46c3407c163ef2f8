#pragma once

#include <cstddef>
#include <string>

#include "cullforge/errors.hpp"

namespace cullforge {

// Per-image compute rates, all in GPU-hours at full resolution.
struct CostParams {
    double student_infer_per_image = 0.0;
    double teacher_infer_per_image = 0.0;
    double student_train_per_image_epoch = 0.0;
    int epochs = 1;
};

struct CostReport {
    double student_training = 0.0;
    double student_prediction = 0.0;
    double teacher_prediction = 0.0;
    double total = 0.0;
    double speedup_vs_full = 1.0;
    double compute_factor_from_scale = 1.0; // 1 / scale^2

    static CostReport assemble(double train, double predict, double teach,
                               double compute_factor) {
        CostReport r;
        r.student_training = train;
        r.student_prediction = predict;
        r.teacher_prediction = teach;
        r.total = train + predict + teach;
        r.compute_factor_from_scale = compute_factor;
        return r;
    }
};

// Surveillance rates back-solved from reported day-scale numbers: 96 h of
// training and 8 h of teacher labeling over 86,400 images, 1.54 h for a
// full student pass. The epoch split is not observable from totals, so
// the profile folds it into one epoch.
inline CostParams surveillance_calibration() {
    CostParams p;
    p.student_train_per_image_epoch = 96.0 / 86400.0;
    p.teacher_infer_per_image = 8.0 / 86400.0;
    p.student_infer_per_image = 1.54 / 86400.0;
    p.epochs = 1;
    return p;
}

// Stage-1 survivor count implied by the same calibration (0.33 h of
// teacher time at the teacher rate above).
inline constexpr std::size_t kSurveillanceStage1Keep = 3564;

inline void validate_cost_params(const CostParams& p) {
    if (p.student_infer_per_image < 0.0 || p.teacher_infer_per_image < 0.0 ||
        p.student_train_per_image_epoch < 0.0)
        throw CullError(Errc::invalid_config, "cost rates must be >= 0");
    if (p.epochs < 1)
        throw CullError(Errc::invalid_config, "epochs must be >= 1");
}

// Baseline: train on everything the teacher labeled; the student never
// runs ahead of training, so its prediction share is zero.
inline CostReport estimate_full(const CostParams& params, std::size_t n_images) {
    validate_cost_params(params);
    if (n_images < 1)
        throw CullError(Errc::domain_error, "estimate_full needs at least one image");
    const double n = static_cast<double>(n_images);
    return CostReport::assemble(
        n * params.student_train_per_image_epoch * params.epochs, 0.0,
        n * params.teacher_infer_per_image, 1.0);
}

// Culled run: one cheap student pass over the whole stream, teacher only
// on stage-1 survivors, training on the target set at scale^2 compute.
inline CostReport estimate_culled(const CostParams& params, std::size_t n_images,
                                  std::size_t stage1_n, std::size_t target_n,
                                  double scale) {
    validate_cost_params(params);
    if (n_images < 1)
        throw CullError(Errc::domain_error, "estimate_culled needs at least one image");
    if (!(target_n <= stage1_n && stage1_n <= n_images))
        throw CullError(Errc::domain_error,
                        "need target_n <= stage1_n <= n_images");
    if (!(scale > 0.0 && scale <= 1.0))
        throw CullError(Errc::domain_error, "scale must be in (0,1]");

    CostReport r = CostReport::assemble(
        static_cast<double>(target_n) * params.student_train_per_image_epoch *
            params.epochs * scale * scale,
        static_cast<double>(n_images) * params.student_infer_per_image,
        static_cast<double>(stage1_n) * params.teacher_infer_per_image,
        1.0 / (scale * scale));
    const double full_total = estimate_full(params, n_images).total;
    r.speedup_vs_full = r.total > 0.0 ? full_total / r.total : 1.0;
    return r;
}

inline double speedup(const CostReport& full, const CostReport& culled) {
    if (culled.total == 0.0)
        throw CullError(Errc::division_by_zero, "culled total is zero");
    return full.total / culled.total;
}

} // namespace cullforge
