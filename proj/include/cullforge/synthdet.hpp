#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cullforge/core.hpp"
#include "cullforge/errors.hpp"

namespace cullforge {

// Deterministic counter-free randomness. Every drawn value is a pure
// function of (seed, frame, object, purpose) so adapters can be called
// from any thread in any order and still agree bit-for-bit.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double range(double lo, double hi) { return lo + (hi - lo) * unit(); }
    std::size_t below(std::size_t n) { return n ? static_cast<std::size_t>(next() % n) : 0; }
};

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
    SplitMix64 m(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
    return m.next();
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

struct SyntheticObject {
    int class_id = 0;
    BoundingBox bbox;
    double hardness = 0.0;          // 0 trivial .. 1 undetectable
    double min_visible_scale = 0.5; // below this the object starts to fade
};

struct SyntheticScene {
    std::string frame_id;
    std::vector<SyntheticObject> objects;

    double total_hardness() const {
        double sum = 0.0;
        for (const auto& o : objects) sum += o.hardness;
        return sum;
    }
};

struct SynthParams {
    std::uint64_t seed = 1;
    std::size_t n_frames = 1000;
    double empty_frame_fraction = 0.30;
    double hard_frame_fraction = 0.10;
    std::size_t objects_min = 1;
    std::size_t objects_max = 3;
    double confidence_noise = 0.03;
    int class_count = 3;

    // The fixed-seed dataset the ablation comparisons run on.
    static SynthParams table2_fixture() {
        SynthParams p;
        p.seed = 7281;
        p.n_frames = 1280;
        return p;
    }

    // Day-scale stream shaped like one surveillance camera at 1 fps.
    static SynthParams surveillance_day(std::uint64_t seed = 1729) {
        SynthParams p;
        p.seed = seed;
        p.n_frames = 86400;
        return p;
    }
};

inline void validate_params(const SynthParams& p) {
    auto fail = [](const std::string& msg) {
        throw CullError(Errc::invalid_config, msg);
    };
    if (p.n_frames == 0) fail("n_frames must be positive");
    if (!(p.empty_frame_fraction >= 0.0 && p.empty_frame_fraction <= 1.0))
        fail("empty_frame_fraction must be in [0,1]");
    if (!(p.hard_frame_fraction >= 0.0 && p.hard_frame_fraction <= 1.0))
        fail("hard_frame_fraction must be in [0,1]");
    if (p.empty_frame_fraction + p.hard_frame_fraction > 1.0)
        fail("empty and hard fractions must not exceed 1 combined");
    if (p.objects_min < 1 || p.objects_min > p.objects_max)
        fail("objects_per_frame range invalid");
    if (!(p.confidence_noise >= 0.0 && p.confidence_noise < 0.5))
        fail("confidence_noise must be in [0,0.5)");
    if (p.class_count < 1) fail("class_count must be positive");
}

namespace synth_detail {

constexpr std::uint64_t kSaltRoles = 0xA11CE5;
constexpr std::uint64_t kSaltScene = 0x5CE11E;
constexpr std::uint64_t kSaltNoise = 0x4015E;
constexpr std::uint64_t kSaltFalsePositive = 0xFA15E;
constexpr std::uint64_t kSaltTeacher = 0x7EAC4;

constexpr double kImageW = 1920.0;
constexpr double kImageH = 1080.0;
constexpr int kGridCols = 6;
constexpr int kGridRows = 4;
// Raw confidences below this never surface as detections.
constexpr double kDetectabilityFloor = 0.05;

inline std::string frame_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06zu", index);
    return buf;
}

inline BoundingBox cell_box(int cell, SplitMix64& rng) {
    const double cw = kImageW / kGridCols;
    const double ch = kImageH / kGridRows;
    const double cx = (cell % kGridCols) * cw;
    const double cy = (cell / kGridCols) * ch;
    BoundingBox box;
    box.w = cw * rng.range(0.40, 0.75);
    box.h = ch * rng.range(0.40, 0.75);
    box.x = cx + rng.unit() * (cw - box.w);
    box.y = cy + rng.unit() * (ch - box.h);
    return box;
}

// Student localization error grows sharply with hardness; easy objects
// land within a few percent, hard ones can miss the 0.5 IoU gate.
inline double jitter_magnitude(double hardness) { return 0.55 * hardness * hardness; }

inline double false_positive_rate(double hardness) {
    return std::clamp(2.2 * (hardness - 0.6), 0.0, 0.95);
}

} // namespace synth_detail

// Seeded scene generation. Exactly round(n * empty_fraction) frames carry
// no objects and round(n * hard_fraction) carry a primary object with
// hardness above 0.7; roles are spread over the stream by a seeded
// permutation so prefixes stay representative.
inline std::vector<SyntheticScene> generate_dataset(const SynthParams& params) {
    using namespace synth_detail;
    validate_params(params);

    const std::size_t n = params.n_frames;
    const std::size_t n_empty =
        static_cast<std::size_t>(params.empty_frame_fraction * static_cast<double>(n) + 0.5);
    const std::size_t n_hard =
        static_cast<std::size_t>(params.hard_frame_fraction * static_cast<double>(n) + 0.5);

    enum class Role { Empty, Hard, Easy };
    std::vector<Role> roles(n, Role::Easy);
    {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        SplitMix64 rng(mix_key(params.seed, kSaltRoles));
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const std::size_t j = i + rng.below(n - i);
            std::swap(perm[i], perm[j]);
        }
        for (std::size_t i = 0; i < n_empty; ++i) roles[perm[i]] = Role::Empty;
        for (std::size_t i = n_empty; i < n_empty + n_hard; ++i) roles[perm[i]] = Role::Hard;
    }

    std::vector<SyntheticScene> scenes;
    scenes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        SyntheticScene scene;
        scene.frame_id = frame_name(i);
        if (roles[i] != Role::Empty) {
            SplitMix64 rng(mix_key(mix_key(params.seed, kSaltScene), i));
            const std::size_t count =
                params.objects_min + rng.below(params.objects_max - params.objects_min + 1);

            // distinct grid cells keep planted boxes from piling up
            int cells[kGridCols * kGridRows];
            std::iota(cells, cells + kGridCols * kGridRows, 0);
            for (std::size_t j = 0; j < count; ++j) {
                const std::size_t pick =
                    j + rng.below(static_cast<std::size_t>(kGridCols * kGridRows) - j);
                std::swap(cells[j], cells[pick]);
            }

            for (std::size_t j = 0; j < count; ++j) {
                SyntheticObject obj;
                obj.class_id = static_cast<int>(rng.below(params.class_count));
                obj.bbox = cell_box(cells[j], rng);
                obj.hardness = (roles[i] == Role::Hard && j == 0) ? rng.range(0.78, 0.95)
                                                                  : rng.range(0.05, 0.22);
                obj.min_visible_scale = rng.range(0.35, 0.90);
                scene.objects.push_back(obj);
            }
        }
        scenes.push_back(std::move(scene));
    }
    return scenes;
}

// Simulated compact student. Emitted confidence decays with hardness and
// with how far the requested scale sits below an object's visibility
// knee; localization jitter and hallucinated boxes scale with hardness.
inline FrameDetections simulate_student(const SyntheticScene& scene, double scale,
                                        const SynthParams& params) {
    using namespace synth_detail;
    FrameDetections frame;
    frame.frame_id = scene.frame_id;
    frame.source = Source::Student;
    frame.scale = scale;

    const std::uint64_t frame_key = mix_key(params.seed, fnv1a(scene.frame_id));
    for (std::size_t j = 0; j < scene.objects.size(); ++j) {
        const SyntheticObject& obj = scene.objects[j];
        SplitMix64 rng(mix_key(frame_key, mix_key(kSaltNoise, j)));
        const double noise = (2.0 * rng.unit() - 1.0) * params.confidence_noise;
        const double dx_u = rng.unit();
        const double dy_u = rng.unit();
        const double fw_u = rng.unit();
        const double fh_u = rng.unit();

        const double m = obj.min_visible_scale;
        const double visibility_penalty = scale < m ? (m - scale) / m : 0.0;
        const double raw = 1.0 - obj.hardness - visibility_penalty + noise;
        if (raw >= kDetectabilityFloor) {
            const double mag = jitter_magnitude(obj.hardness);
            Detection d;
            d.class_id = obj.class_id;
            d.score = std::min(raw, 1.0);
            d.bbox.w = obj.bbox.w * (1.0 + (2.0 * fw_u - 1.0) * mag);
            d.bbox.h = obj.bbox.h * (1.0 + (2.0 * fh_u - 1.0) * mag);
            d.bbox.x = obj.bbox.x + (2.0 * dx_u - 1.0) * mag * obj.bbox.w;
            d.bbox.y = obj.bbox.y + (2.0 * dy_u - 1.0) * mag * obj.bbox.h;
            frame.detections.push_back(d);
        }

        // hallucinations, drawn from their own stream so they are stable
        // whether or not the true detection survived
        SplitMix64 fp_rng(mix_key(frame_key, mix_key(kSaltFalsePositive, j)));
        if (fp_rng.unit() < false_positive_rate(obj.hardness)) {
            Detection fp;
            fp.class_id = static_cast<int>(fp_rng.below(params.class_count));
            fp.bbox = cell_box(static_cast<int>(fp_rng.below(kGridCols * kGridRows)), fp_rng);
            fp.score = fp_rng.range(0.10, 0.45);
            frame.detections.push_back(fp);
        }
    }
    return frame;
}

// Simulated oracle-grade teacher: every planted object, exact box, near
// certain confidence, always evaluated at full resolution.
inline FrameDetections simulate_teacher(const SyntheticScene& scene,
                                        const SynthParams& params) {
    using namespace synth_detail;
    FrameDetections frame;
    frame.frame_id = scene.frame_id;
    frame.source = Source::Teacher;
    frame.scale = 1.0;

    const std::uint64_t frame_key = mix_key(params.seed, fnv1a(scene.frame_id));
    for (std::size_t j = 0; j < scene.objects.size(); ++j) {
        SplitMix64 rng(mix_key(frame_key, mix_key(kSaltTeacher, j)));
        Detection d;
        d.class_id = scene.objects[j].class_id;
        d.bbox = scene.objects[j].bbox;
        d.score = 0.95 + 0.05 * rng.unit();
        frame.detections.push_back(d);
    }
    return frame;
}

// Generated scenes plus an id index; immutable once built, shareable.
class SyntheticDataset {
public:
    explicit SyntheticDataset(SynthParams params)
        : params_(params), scenes_(generate_dataset(params)) {
        index_.reserve(scenes_.size());
        for (std::size_t i = 0; i < scenes_.size(); ++i)
            index_.emplace(scenes_[i].frame_id, i);
    }

    const SynthParams& params() const { return params_; }
    const std::vector<SyntheticScene>& scenes() const { return scenes_; }

    const SyntheticScene& scene(const std::string& frame_id) const {
        auto it = index_.find(frame_id);
        if (it == index_.end())
            throw CullError(Errc::missing_detections,
                            "unknown synthetic frame " + frame_id);
        return scenes_[it->second];
    }

    std::vector<std::string> frame_ids() const {
        std::vector<std::string> ids;
        ids.reserve(scenes_.size());
        for (const auto& s : scenes_) ids.push_back(s.frame_id);
        return ids;
    }

private:
    SynthParams params_;
    std::vector<SyntheticScene> scenes_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct SyntheticStudentAdapter {
    const SyntheticDataset* data = nullptr;

    FrameDetections detect(const std::string& frame_id, double scale) const {
        return simulate_student(data->scene(frame_id), scale, data->params());
    }
};

struct SyntheticTeacherAdapter {
    const SyntheticDataset* data = nullptr;

    FrameDetections detect(const std::string& frame_id, double /*scale*/) const {
        return simulate_teacher(data->scene(frame_id), data->params());
    }
};

struct OracleHardSet {
    std::vector<std::string> ids; // hardest first
    bool degenerate = false;      // the cut had to include zero-hardness frames
};

// Ground-truth ranking by planted difficulty: the n frames with the
// largest summed hardness, ties by frame_id. This is what the culling
// strategies are measured against.
inline OracleHardSet oracle_hard_set(const std::vector<SyntheticScene>& scenes,
                                     std::size_t n) {
    if (n > scenes.size())
        throw CullError(Errc::too_few_frames,
                        "requested " + std::to_string(n) + " of " +
                            std::to_string(scenes.size()) + " frames");
    std::vector<std::pair<std::string, double>> ranked;
    ranked.reserve(scenes.size());
    for (const auto& s : scenes) ranked.emplace_back(s.frame_id, s.total_hardness());
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) {
                  if (a.second != b.second) return a.second > b.second;
                  return a.first < b.first;
              });
    OracleHardSet out;
    out.ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.ids.push_back(ranked[i].first);
        if (ranked[i].second == 0.0) out.degenerate = true;
    }
    return out;
}

} // namespace cullforge
