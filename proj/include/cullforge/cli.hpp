#pragma once

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "cullforge/cullforge.hpp"

namespace cullforge::cli {

// ---------------------------------------------------------------------
// detections loaded from disk, addressable by (frame_id, scale)

class FileDetectionStore {
public:
    static constexpr double kScaleTol = 1e-9;

    void add(FrameDetections f) {
        auto& variants = frames_[f.frame_id];
        for (const auto& existing : variants) {
            if (std::fabs(existing.scale - f.scale) <= kScaleTol)
                throw CullError(Errc::duplicate_frame_id,
                                "duplicate detections for frame " + f.frame_id +
                                    " at scale " + fmt_g9(f.scale));
        }
        order_.emplace_back(f.frame_id, f.scale);
        variants.push_back(std::move(f));
    }

    static FileDetectionStore load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw CullError(Errc::parse_error, "cannot open detections: " + path);
        FileDetectionStore store;
        JsonlReader reader(in);
        while (auto f = reader.next()) store.add(std::move(*f));
        return store;
    }

    std::optional<FrameDetections> get(const std::string& frame_id, double scale) const {
        auto it = frames_.find(frame_id);
        if (it == frames_.end()) return std::nullopt;
        for (const auto& f : it->second)
            if (std::fabs(f.scale - scale) <= kScaleTol) return f;
        return std::nullopt;
    }

    // frame ids present at the given scale, in file order
    std::vector<std::string> frame_ids_at_scale(double scale) const {
        std::vector<std::string> ids;
        for (const auto& [id, s] : order_)
            if (std::fabs(s - scale) <= kScaleTol) ids.push_back(id);
        return ids;
    }

    std::size_t size() const { return order_.size(); }

private:
    std::unordered_map<std::string, std::vector<FrameDetections>> frames_;
    std::vector<std::pair<std::string, double>> order_;
};

struct FileDetectorAdapter {
    const FileDetectionStore* store = nullptr;

    FrameDetections detect(const std::string& frame_id, double scale) const {
        std::optional<FrameDetections> f = store->get(frame_id, scale);
        if (!f)
            throw CullError(Errc::missing_detections,
                            "no detections on file for frame " + frame_id +
                                " at scale " + fmt_g9(scale));
        return std::move(*f);
    }
};

// ---------------------------------------------------------------------
// configuration: defaults (or a manifest snapshot) < $CULLFORGE_CONFIG
// file < --config file < explicit flags

struct Flags {
    std::optional<std::string> config_path;
    std::optional<std::size_t> target_n;
    std::optional<std::size_t> stage1_keep;
    std::optional<double> q_weight, b_offset, iou_threshold, scale_step, min_scale,
        mse_threshold, score_floor;

    std::string strategy = "confidence+precision";
    std::uint64_t seed = 7281;
    unsigned threads = 1;
    std::string output;
};

inline void add_config_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config_path, "JSON config file mirroring the pipeline fields");
    cmd->add_option("--target-size", f.target_n, "final culled dataset size");
    cmd->add_option("--stage1-keep", f.stage1_keep,
                    "confidence-stage survivor count (default: 6x target)");
    cmd->add_option("--q", f.q_weight, "confidence-loss low-confidence weight Q");
    cmd->add_option("--b", f.b_offset, "confidence-loss offset b");
    cmd->add_option("--iou", f.iou_threshold, "IoU match threshold");
    cmd->add_option("--scale-step", f.scale_step, "resolution sweep multiplier");
    cmd->add_option("--min-scale", f.min_scale, "resolution sweep floor");
    cmd->add_option("--mse-threshold", f.mse_threshold, "per-frame MSE tolerance for optResolution");
    cmd->add_option("--score-floor", f.score_floor, "drop raw detections below this score");
    cmd->add_option("--strategy", f.strategy,
                    "intermittent|entropy|confidence|precision|confidence+precision");
    cmd->add_option("--seed", f.seed, "seed for synthetic data");
    cmd->add_option("--threads", f.threads, "worker threads (1 = serial)");
    cmd->add_option("--output", f.output, "output path (default: stdout)");
}

inline CullConfig resolve_config(const Flags& f, const CullConfig* base = nullptr) {
    CullConfig c = base ? *base : CullConfig{};
    bool stage1_set = base != nullptr;

    auto apply_file = [&](const std::string& path) {
        const ConfigOverlay o = read_config_file(path);
        stage1_set = stage1_set || o.stage1_keep.has_value();
        o.apply(c);
    };
    if (const char* env = std::getenv("CULLFORGE_CONFIG"); env && *env && !f.config_path)
        apply_file(env);
    if (f.config_path) apply_file(*f.config_path);

    if (f.q_weight) c.q_weight = *f.q_weight;
    if (f.b_offset) c.b_offset = *f.b_offset;
    if (f.target_n) c.target_n = *f.target_n;
    if (f.stage1_keep) {
        c.stage1_keep = *f.stage1_keep;
        stage1_set = true;
    }
    if (f.iou_threshold) c.iou_threshold = *f.iou_threshold;
    if (f.scale_step) c.scale_step = *f.scale_step;
    if (f.min_scale) c.min_scale = *f.min_scale;
    if (f.mse_threshold) c.mse_threshold = *f.mse_threshold;
    if (f.score_floor) c.score_floor = *f.score_floor;

    if (!stage1_set) c.stage1_keep = c.target_n * 6;
    validate_config(c);
    return c;
}

inline Strategy strategy_from_name(const std::string& name) {
    if (name == "intermittent") return Strategy::intermittent();
    if (name == "entropy") return Strategy::entropy();
    if (name == "confidence") return Strategy::confidence();
    if (name == "precision") return Strategy::precision();
    if (name == "confidence+precision" || name == "confidence_plus_precision")
        return Strategy::confidence_plus_precision();
    throw CLI::ValidationError("--strategy", "unknown strategy: " + name);
}

// Writes to --output when given, stdout otherwise.
template <typename WriteFn>
void emit(const Flags& f, std::ostream& out, WriteFn&& write) {
    if (f.output.empty()) {
        write(out);
    } else {
        std::ofstream file(f.output, std::ios::binary);
        if (!file)
            throw CullError(Errc::parse_error, "cannot open for writing: " + f.output);
        write(file);
    }
}

namespace detail {

constexpr double kFullScale = 1.0;

inline bool is_full_scale(double s) { return std::fabs(s - kFullScale) <= 1e-9; }

inline SynthParams synth_params(std::size_t frames, std::uint64_t seed) {
    SynthParams p;
    p.seed = seed;
    p.n_frames = frames;
    return p;
}

// truth CSV: header then frame_id,total_hardness rows
inline std::vector<std::pair<std::string, double>> read_truth_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CullError(Errc::parse_error, "cannot open truth table: " + path);
    std::vector<std::pair<std::string, double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue; // header
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError(line_no, "expected frame_id,total_hardness");
        try {
            rows.emplace_back(line.substr(0, comma), std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw ParseError(line_no, "bad hardness value");
        }
    }
    return rows;
}

} // namespace detail

// ---------------------------------------------------------------------
// subcommands

struct ScoreArgs {
    std::string input;
};

inline int cmd_score(const Flags& flags, const ScoreArgs& args, std::ostream& out) {
    const CullConfig config = resolve_config(flags);
    const DifficultyScorer scorer =
        flags.strategy == "entropy"
            ? DifficultyScorer::entropy()
            : DifficultyScorer::confidence(config.q_weight, config.b_offset);

    std::ifstream in(args.input, std::ios::binary);
    if (!in) throw CullError(Errc::parse_error, "cannot open detections: " + args.input);

    emit(flags, out, [&](std::ostream& sink) {
        sink << "frame_id,difficulty\n";
        JsonlReader reader(in);
        while (auto frame = reader.next()) {
            if (!detail::is_full_scale(frame->scale)) continue;
            const FrameDetections valid =
                validate_frame(std::move(*frame), config.score_floor);
            sink << valid.frame_id << ','
                 << fmt_g9(frame_difficulty(valid, scorer)) << '\n';
        }
    });
    return 0;
}

struct Stage1Args {
    std::string input;
};

inline int cmd_stage1(const Flags& flags, const Stage1Args& args, std::ostream& out) {
    const CullConfig config = resolve_config(flags);
    const DifficultyScorer scorer =
        DifficultyScorer::confidence(config.q_weight, config.b_offset);

    std::ifstream in(args.input, std::ios::binary);
    if (!in) throw CullError(Errc::parse_error, "cannot open detections: " + args.input);

    JsonlReader reader(in);
    std::size_t seen = 0;
    auto source = [&]() -> std::optional<FrameDetections> {
        while (auto frame = reader.next()) {
            if (!detail::is_full_scale(frame->scale)) continue;
            ++seen;
            return frame;
        }
        return std::nullopt;
    };
    const std::vector<FrameScore> kept =
        cull_stage1(source, scorer, config.stage1_keep, config.score_floor);
    if (seen == 0) throw CullError(Errc::empty_stream, "no full-scale frames in input");

    Manifest m;
    m.config_snapshot = config;
    m.source_count = seen;
    m.chosen_scale = 1.0;
    m.under_filled = kept.size() < config.target_n;
    for (const auto& [id, difficulty] : kept) m.entries.push_back({id, difficulty});
    emit(flags, out, [&](std::ostream& sink) { write_manifest(sink, m); });
    return 0;
}

struct Stage2Args {
    std::string manifest;
    std::string student;
    std::string teacher;
};

inline int cmd_stage2(const Flags& flags, const Stage2Args& args, std::ostream& out) {
    const Manifest input = read_manifest_file(args.manifest);
    const CullConfig config = resolve_config(flags, &input.config_snapshot);

    const FileDetectionStore student = FileDetectionStore::load(args.student);
    const FileDetectionStore teacher = FileDetectionStore::load(args.teacher);

    std::vector<std::string> candidates = input.frame_ids();
    auto student_lookup = [&](const std::string& id) -> std::optional<FrameDetections> {
        auto f = student.get(id, detail::kFullScale);
        if (!f) return std::nullopt;
        return validate_frame(std::move(*f), config.score_floor);
    };
    auto teacher_lookup = [&](const std::string& id) -> std::optional<FrameDetections> {
        auto f = teacher.get(id, detail::kFullScale);
        if (!f) return std::nullopt;
        return validate_frame(std::move(*f), config.score_floor);
    };
    const std::vector<FrameScore> kept =
        cull_stage2(candidates, student_lookup, teacher_lookup, config.iou_threshold,
                    config.target_n, flags.threads);

    Manifest m;
    m.config_snapshot = config;
    m.source_count = input.source_count;
    m.chosen_scale = input.chosen_scale;
    m.under_filled = candidates.size() < config.target_n;
    for (const auto& [id, difficulty] : kept) m.entries.push_back({id, difficulty});
    emit(flags, out, [&](std::ostream& sink) { write_manifest(sink, m); });
    return 0;
}

struct RunArgs {
    std::string input;          // student JSONL; empty in synthetic mode
    std::string teacher;        // teacher JSONL
    std::size_t synth_frames = 0;
    bool opt_resolution = false;
    std::string trace_path;
};

template <DetectorAdapter S, DetectorAdapter T>
int run_with_adapters(const Flags& flags, const RunArgs& args, const CullConfig& config,
                      const S& student, const T& teacher,
                      const std::vector<std::string>& ids, std::ostream& out,
                      std::ostream& err) {
    const CountingAdapter<S> counted_student(student);
    const CountingAdapter<T> counted_teacher(teacher);
    PipelineOptions opts;
    opts.opt_resolution = args.opt_resolution;
    opts.threads = flags.threads;

    const Strategy strategy = strategy_from_name(flags.strategy);
    Manifest manifest;
    if (strategy.kind == Strategy::Kind::ConfidencePlusPrecision) {
        PipelineResult result =
            run_pipeline(config, counted_student, counted_teacher, ids, opts);
        manifest = std::move(result.manifest);
        const StageTrace& trace = result.trace;
        err << "input_frames=" << trace.input_count
            << " stage1_survivors=" << trace.stage1_survivors.size()
            << " stage2_survivors=" << trace.stage2_survivors.size()
            << " reduction_stage1=" << fmt_g9(trace.per_stage_reduction.first)
            << " reduction_stage2=" << fmt_g9(trace.per_stage_reduction.second)
            << " total_reduction="
            << fmt_g9(static_cast<double>(trace.input_count) /
                      static_cast<double>(trace.stage2_survivors.size()))
            << " teacher_calls=" << counted_teacher.calls()
            << " chosen_scale=" << fmt_g9(manifest.chosen_scale) << '\n';
        if (!args.trace_path.empty()) {
            std::ofstream tf(args.trace_path, std::ios::binary);
            if (!tf)
                throw CullError(Errc::parse_error,
                                "cannot open for writing: " + args.trace_path);
            json j;
            j["input_count"] = trace.input_count;
            j["stage1_survivors"] = trace.stage1_survivors;
            j["stage2_survivors"] = trace.stage2_survivors;
            j["per_stage_reduction"] = {trace.per_stage_reduction.first,
                                        trace.per_stage_reduction.second};
            j["teacher_calls"] = counted_teacher.calls();
            tf << j.dump(2) << '\n';
        }
    } else {
        manifest = run_strategy(strategy, config, counted_student, counted_teacher, ids, opts);
        err << "strategy=" << to_string(strategy.kind)
            << " kept=" << manifest.entries.size()
            << " teacher_calls=" << counted_teacher.calls() << '\n';
    }
    emit(flags, out, [&](std::ostream& sink) { write_manifest(sink, manifest); });
    return 0;
}

inline int cmd_run(const Flags& flags, const RunArgs& args, std::ostream& out,
                   std::ostream& err) {
    const CullConfig config = resolve_config(flags);
    if (args.synth_frames > 0) {
        const SyntheticDataset data(detail::synth_params(args.synth_frames, flags.seed));
        return run_with_adapters(flags, args, config, SyntheticStudentAdapter{&data},
                                 SyntheticTeacherAdapter{&data}, data.frame_ids(), out, err);
    }
    if (args.input.empty() || args.teacher.empty())
        throw CLI::ValidationError("run", "need INPUT and --teacher, or --synth N");
    const FileDetectionStore student = FileDetectionStore::load(args.input);
    const FileDetectionStore teacher = FileDetectionStore::load(args.teacher);
    const std::vector<std::string> ids = student.frame_ids_at_scale(detail::kFullScale);
    return run_with_adapters(flags, args, config, FileDetectorAdapter{&student},
                             FileDetectorAdapter{&teacher}, ids, out, err);
}

struct OptresArgs {
    std::string manifest;
    std::string student;        // student JSONL with swept scales
    std::size_t synth_frames = 0;
    bool full_sweep = false;
    std::string write_manifest_path;
};

template <DetectorAdapter S>
int optres_with_adapter(const Flags& flags, const OptresArgs& args, const CullConfig& config,
                        Manifest manifest, const S& student, std::ostream& out,
                        std::ostream& err) {
    const DifficultyScorer scorer =
        DifficultyScorer::confidence(config.q_weight, config.b_offset);
    const double threshold = total_mse_threshold(config, manifest.entries.size());
    const std::optional<double> stop =
        args.full_sweep ? std::nullopt : std::optional<double>(threshold);
    const ScaleSweep sweep =
        sweep_scales(manifest, student, scorer, config.scale_step, config.min_scale,
                     config.score_floor, stop, flags.threads);
    const double chosen = choose_scale(sweep, threshold);
    err << "chosen_scale=" << fmt_g9(chosen) << " mse_threshold=" << fmt_g9(threshold)
        << " scales_evaluated=" << sweep.scales.size() << '\n';

    emit(flags, out, [&](std::ostream& sink) { write_mse_csv(sink, sweep); });
    if (!args.write_manifest_path.empty()) {
        manifest.chosen_scale = chosen;
        manifest.config_snapshot = config;
        write_manifest_file(args.write_manifest_path, manifest);
    }
    return 0;
}

inline int cmd_optres(const Flags& flags, const OptresArgs& args, std::ostream& out,
                      std::ostream& err) {
    Manifest manifest = read_manifest_file(args.manifest);
    const CullConfig config = resolve_config(flags, &manifest.config_snapshot);
    if (args.synth_frames > 0) {
        const SyntheticDataset data(detail::synth_params(args.synth_frames, flags.seed));
        return optres_with_adapter(flags, args, config, std::move(manifest),
                                   SyntheticStudentAdapter{&data}, out, err);
    }
    if (args.student.empty())
        throw CLI::ValidationError("optres", "need --student FILE or --synth N");
    const FileDetectionStore store = FileDetectionStore::load(args.student);
    return optres_with_adapter(flags, args, config, std::move(manifest),
                               FileDetectorAdapter{&store}, out, err);
}

struct AblateArgs {
    std::string input;
    std::string teacher;
    std::string truth;
    std::size_t synth_frames = 0;
};

struct AblationRow {
    std::string strategy;
    std::size_t kept = 0;
    std::size_t teacher_calls = 0;
    double recall = std::numeric_limits<double>::quiet_NaN();
    double overlap_vs_precision = 0.0;
};

template <DetectorAdapter S, DetectorAdapter T>
std::vector<AblationRow> run_ablation(const CullConfig& config, const S& student,
                                      const T& teacher,
                                      const std::vector<std::string>& ids,
                                      const std::vector<std::string>& oracle_ids,
                                      unsigned threads) {
    const Strategy strategies[] = {
        Strategy::intermittent(), Strategy::entropy(), Strategy::confidence(),
        Strategy::precision(), Strategy::confidence_plus_precision()};

    PipelineOptions opts;
    opts.threads = threads;

    std::vector<Manifest> manifests;
    std::vector<AblationRow> rows;
    for (const Strategy& s : strategies) {
        const CountingAdapter<T> counted(teacher);
        Manifest m = run_strategy(s, config, student, counted, ids, opts);
        AblationRow row;
        row.strategy = to_string(s.kind);
        row.kept = m.entries.size();
        row.teacher_calls = counted.calls();
        if (!oracle_ids.empty()) {
            std::unordered_set<std::string> oracle(oracle_ids.begin(), oracle_ids.end());
            std::size_t hit = 0;
            for (const auto& e : m.entries) hit += oracle.count(e.frame_id);
            row.recall = static_cast<double>(hit) / static_cast<double>(oracle.size());
        }
        rows.push_back(row);
        manifests.push_back(std::move(m));
    }
    const Manifest& precision_manifest = manifests[3];
    for (std::size_t i = 0; i < rows.size(); ++i)
        rows[i].overlap_vs_precision = overlap_report(manifests[i], precision_manifest);
    return rows;
}

inline void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
    out << "strategy,kept,teacher_calls,recall,overlap_vs_precision\n";
    for (const auto& r : rows) {
        out << r.strategy << ',' << r.kept << ',' << r.teacher_calls << ',';
        if (std::isnan(r.recall))
            out << "na";
        else
            out << fmt_g9(r.recall);
        out << ',' << fmt_g9(r.overlap_vs_precision) << '\n';
    }
}

inline int cmd_ablate(const Flags& flags, const AblateArgs& args, std::ostream& out) {
    const CullConfig config = resolve_config(flags);

    std::vector<AblationRow> rows;
    if (args.synth_frames > 0) {
        const SyntheticDataset data(detail::synth_params(args.synth_frames, flags.seed));
        const OracleHardSet oracle = oracle_hard_set(data.scenes(), config.target_n);
        rows = run_ablation(config, SyntheticStudentAdapter{&data},
                            SyntheticTeacherAdapter{&data}, data.frame_ids(), oracle.ids,
                            flags.threads);
    } else {
        if (args.input.empty() || args.teacher.empty())
            throw CLI::ValidationError("ablate", "need INPUT and --teacher, or --synth N");
        const FileDetectionStore student = FileDetectionStore::load(args.input);
        const FileDetectionStore teacher = FileDetectionStore::load(args.teacher);
        const std::vector<std::string> ids =
            student.frame_ids_at_scale(detail::kFullScale);
        std::vector<std::string> oracle_ids;
        if (!args.truth.empty()) {
            auto rows_truth = detail::read_truth_csv(args.truth);
            std::sort(rows_truth.begin(), rows_truth.end(),
                      [](const auto& a, const auto& b) {
                          if (a.second != b.second) return a.second > b.second;
                          return a.first < b.first;
                      });
            const std::size_t n = std::min(config.target_n, rows_truth.size());
            for (std::size_t i = 0; i < n; ++i) oracle_ids.push_back(rows_truth[i].first);
        }
        rows = run_ablation(config, FileDetectorAdapter{&student},
                            FileDetectorAdapter{&teacher}, ids, oracle_ids, flags.threads);
    }
    emit(flags, out, [&](std::ostream& sink) { write_ablation_csv(sink, rows); });
    return 0;
}

struct ReportArgs {
    std::string manifest;
    std::string profile;
};

inline int cmd_report(const Flags& flags, const ReportArgs& args, std::ostream& out) {
    const Manifest m = read_manifest_file(args.manifest);
    const CostParams params =
        args.profile.empty() ? surveillance_calibration() : read_cost_profile(args.profile);

    const std::size_t n = m.source_count;
    const std::size_t stage1_n = std::min(m.config_snapshot.stage1_keep, n);
    const CostReport full = estimate_full(params, n);
    const CostReport culled =
        estimate_culled(params, n, stage1_n, m.entries.size(), m.chosen_scale);

    emit(flags, out, [&](std::ostream& sink) {
        sink << "metric,value\n";
        sink << "source_images," << n << '\n';
        sink << "culled_images," << m.entries.size() << '\n';
        sink << "chosen_scale," << fmt_g9(m.chosen_scale) << '\n';
        sink << "full_total_hours," << fmt_g9(full.total) << '\n';
        sink << "culled_student_training_hours," << fmt_g9(culled.student_training) << '\n';
        sink << "culled_student_prediction_hours," << fmt_g9(culled.student_prediction) << '\n';
        sink << "culled_teacher_prediction_hours," << fmt_g9(culled.teacher_prediction) << '\n';
        sink << "culled_total_hours," << fmt_g9(culled.total) << '\n';
        sink << "speedup_vs_full," << fmt_g9(culled.speedup_vs_full) << '\n';
        sink << "compute_factor_from_scale," << fmt_g9(culled.compute_factor_from_scale) << '\n';
    });
    return 0;
}

struct SynthArgs {
    std::string prefix;
    std::size_t frames = 1280;
    double empty_fraction = 0.30;
    double hard_fraction = 0.10;
    bool sweep_scales = false;
};

inline int cmd_synth(const Flags& flags, const SynthArgs& args, std::ostream& err) {
    const CullConfig config = resolve_config(flags);
    SynthParams params = detail::synth_params(args.frames, flags.seed);
    params.empty_frame_fraction = args.empty_fraction;
    params.hard_frame_fraction = args.hard_fraction;
    const SyntheticDataset data(params);

    const std::string student_path = args.prefix + ".student.jsonl";
    const std::string teacher_path = args.prefix + ".teacher.jsonl";
    const std::string truth_path = args.prefix + ".truth.csv";

    std::ofstream student(student_path, std::ios::binary);
    std::ofstream teacher(teacher_path, std::ios::binary);
    std::ofstream truth(truth_path, std::ios::binary);
    if (!student || !teacher || !truth)
        throw CullError(Errc::parse_error, "cannot write fixture files at " + args.prefix);

    std::vector<double> scales{1.0};
    if (args.sweep_scales)
        for (double s = config.scale_step; s >= config.min_scale; s *= config.scale_step)
            scales.push_back(s);

    truth << "frame_id,total_hardness\n";
    for (const SyntheticScene& scene : data.scenes()) {
        for (double s : scales)
            student << detections_line(simulate_student(scene, s, params)) << '\n';
        teacher << detections_line(simulate_teacher(scene, params)) << '\n';
        truth << scene.frame_id << ',' << fmt_g9(scene.total_hardness()) << '\n';
    }
    err << "wrote " << student_path << " (" << data.scenes().size() * scales.size()
        << " lines), " << teacher_path << ", " << truth_path << '\n';
    return 0;
}

// ---------------------------------------------------------------------
// entry point

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"cullforge: cull a detection stream down to its hard examples"};
    app.require_subcommand(1);
    Flags flags;

    ScoreArgs score_args;
    CLI::App* score = app.add_subcommand("score", "per-frame difficulty of a detection stream");
    score->add_option("input", score_args.input, "detections JSONL")->required();
    add_config_flags(score, flags);

    Stage1Args stage1_args;
    CLI::App* stage1 = app.add_subcommand("stage1", "confidence-stage cull to a manifest");
    stage1->add_option("input", stage1_args.input, "student detections JSONL")->required();
    add_config_flags(stage1, flags);

    Stage2Args stage2_args;
    CLI::App* stage2 = app.add_subcommand("stage2", "precision-stage cull of a manifest");
    stage2->add_option("manifest", stage2_args.manifest, "stage-1 manifest")->required();
    stage2->add_option("--student", stage2_args.student, "student detections JSONL")->required();
    stage2->add_option("--teacher", stage2_args.teacher, "teacher detections JSONL")->required();
    add_config_flags(stage2, flags);

    RunArgs run_args;
    CLI::App* run_cmd = app.add_subcommand("run", "full culling pipeline");
    run_cmd->add_option("input", run_args.input, "student detections JSONL");
    run_cmd->add_option("--teacher", run_args.teacher, "teacher detections JSONL");
    run_cmd->add_option("--synth", run_args.synth_frames, "use a synthetic stream of N frames");
    run_cmd->add_flag("--opt-resolution", run_args.opt_resolution, "run the resolution sweep");
    run_cmd->add_option("--trace", run_args.trace_path, "write stage trace JSON here");
    add_config_flags(run_cmd, flags);

    OptresArgs optres_args;
    CLI::App* optres = app.add_subcommand("optres", "resolution sweep for a culled manifest");
    optres->add_option("manifest", optres_args.manifest, "culled manifest")->required();
    optres->add_option("--student", optres_args.student, "student detections JSONL with swept scales");
    optres->add_option("--synth", optres_args.synth_frames, "use a synthetic stream of N frames");
    optres->add_flag("--full-sweep", optres_args.full_sweep, "evaluate every scale, no early stop");
    optres->add_option("--write-manifest", optres_args.write_manifest_path,
                       "write the manifest with the chosen scale here");
    add_config_flags(optres, flags);

    AblateArgs ablate_args;
    CLI::App* ablate = app.add_subcommand("ablate", "compare all culling strategies");
    ablate->add_option("input", ablate_args.input, "student detections JSONL");
    ablate->add_option("--teacher", ablate_args.teacher, "teacher detections JSONL");
    ablate->add_option("--truth", ablate_args.truth, "planted-hardness CSV for recall");
    ablate->add_option("--synth", ablate_args.synth_frames, "use a synthetic stream of N frames");
    add_config_flags(ablate, flags);

    ReportArgs report_args;
    CLI::App* report = app.add_subcommand("report", "training-cost estimate for a manifest");
    report->add_option("manifest", report_args.manifest, "culled manifest")->required();
    report->add_option("--profile", report_args.profile, "cost profile JSON");
    add_config_flags(report, flags);

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "generate synthetic dataset files");
    synth->add_option("--frames", synth_args.frames, "frame count");
    synth->add_option("--empty-fraction", synth_args.empty_fraction, "share of empty frames");
    synth->add_option("--hard-fraction", synth_args.hard_fraction, "share of hard frames");
    synth->add_flag("--sweep-scales", synth_args.sweep_scales,
                    "also dump student detections at every sweep scale");
    add_config_flags(synth, flags);
    synth->get_option("--output")->required();

    try {
        app.parse(argc, argv);
        if (score->parsed()) return cmd_score(flags, score_args, out);
        if (stage1->parsed()) return cmd_stage1(flags, stage1_args, out);
        if (stage2->parsed()) return cmd_stage2(flags, stage2_args, out);
        if (run_cmd->parsed()) return cmd_run(flags, run_args, out, err);
        if (optres->parsed()) return cmd_optres(flags, optres_args, out, err);
        if (ablate->parsed()) return cmd_ablate(flags, ablate_args, out);
        if (report->parsed()) return cmd_report(flags, report_args, out);
        if (synth->parsed()) {
            if (synth_args.prefix.empty()) synth_args.prefix = flags.output;
            return cmd_synth(flags, synth_args, err);
        }
        err << app.help();
        return 1;
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const ParseError& e) {
        err << "data error: " << e.what() << '\n';
        return 2;
    } catch (const CullError& e) {
        err << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}

} // namespace cullforge::cli
