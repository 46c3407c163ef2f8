#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "cullforge/core.hpp"
#include "cullforge/costmodel.hpp"
#include "cullforge/errors.hpp"
#include "cullforge/optres.hpp"
#include "cullforge/scoring.hpp"

namespace cullforge {

using nlohmann::json;

// Difficulties, scales and config floats are serialized at 9 significant
// digits. That is coarse enough to reprint identically after a
// parse/write round trip and fine enough to keep orderings intact.
inline std::string fmt_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline std::string json_quote(const std::string& s) { return json(s).dump(); }

// ---------------------------------------------------------------------
// detections JSONL: one frame per line, unknown fields ignored

inline FrameDetections frame_from_json(const json& j, std::size_t line) {
    auto fail = [&](const std::string& reason) -> ParseError {
        return ParseError(line, reason);
    };
    if (!j.is_object()) throw fail("expected a JSON object");
    FrameDetections f;
    try {
        f.frame_id = j.at("frame_id").get<std::string>();
        const std::string source = j.value("source", std::string("student"));
        if (source == "student") {
            f.source = Source::Student;
        } else if (source == "teacher") {
            f.source = Source::Teacher;
        } else {
            throw fail("source must be \"student\" or \"teacher\"");
        }
        f.scale = j.value("scale", 1.0);
        if (j.contains("detections")) {
            const json& dets = j.at("detections");
            if (!dets.is_array()) throw fail("detections must be an array");
            f.detections.reserve(dets.size());
            for (const json& dj : dets) {
                Detection d;
                d.class_id = dj.at("class").get<int>();
                const json& bb = dj.at("bbox");
                if (!bb.is_array() || bb.size() != 4)
                    throw fail("bbox must be [x,y,w,h]");
                d.bbox = {bb[0].get<double>(), bb[1].get<double>(),
                          bb[2].get<double>(), bb[3].get<double>()};
                d.score = dj.at("score").get<double>();
                f.detections.push_back(d);
            }
        }
    } catch (const json::exception& e) {
        throw fail(e.what());
    }
    try {
        return validate_frame(std::move(f));
    } catch (const CullError& e) {
        // keep the category, add the offending line
        throw CullError(e.code(), "line " + std::to_string(line) + ": " + e.what());
    }
}

// Pull-based line reader; memory use is one line at a time no matter how
// long the stream runs.
class JsonlReader {
public:
    explicit JsonlReader(std::istream& in) : in_(&in) {}

    std::optional<FrameDetections> next() {
        std::string line;
        while (std::getline(*in_, line)) {
            ++line_number_;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::exception& e) {
                throw ParseError(line_number_, e.what());
            }
            return frame_from_json(j, line_number_);
        }
        return std::nullopt;
    }

    std::size_t line_number() const { return line_number_; }

private:
    std::istream* in_;
    std::size_t line_number_ = 0;
};

inline std::vector<FrameDetections> read_detections_jsonl(std::istream& in) {
    JsonlReader reader(in);
    std::vector<FrameDetections> frames;
    while (auto f = reader.next()) frames.push_back(std::move(*f));
    return frames;
}

inline std::string detections_line(const FrameDetections& f) {
    std::string out = "{\"frame_id\":" + json_quote(f.frame_id) +
                      ",\"source\":\"" + to_string(f.source) +
                      "\",\"scale\":" + fmt_g9(f.scale) + ",\"detections\":[";
    for (std::size_t i = 0; i < f.detections.size(); ++i) {
        const Detection& d = f.detections[i];
        if (i) out += ',';
        out += "{\"class\":" + std::to_string(d.class_id) + ",\"bbox\":[" +
               fmt_g9(d.bbox.x) + ',' + fmt_g9(d.bbox.y) + ',' + fmt_g9(d.bbox.w) +
               ',' + fmt_g9(d.bbox.h) + "],\"score\":" + fmt_g9(d.score) + '}';
    }
    out += "]}";
    return out;
}

inline void write_detections_jsonl(std::ostream& out,
                                   const std::vector<FrameDetections>& frames) {
    for (const auto& f : frames) out << detections_line(f) << '\n';
}

// ---------------------------------------------------------------------
// manifest file: single JSON document, deterministic bytes

inline void write_manifest(std::ostream& out, const Manifest& m) {
    const CullConfig& c = m.config_snapshot;
    out << "{\n";
    out << "  \"version\": 1,\n";
    out << "  \"chosen_scale\": " << fmt_g9(m.chosen_scale) << ",\n";
    out << "  \"source_count\": " << m.source_count << ",\n";
    out << "  \"under_filled\": " << (m.under_filled ? "true" : "false") << ",\n";
    out << "  \"config\": {"
        << "\"q_weight\": " << fmt_g9(c.q_weight)
        << ", \"b_offset\": " << fmt_g9(c.b_offset)
        << ", \"stage1_keep\": " << c.stage1_keep
        << ", \"target_n\": " << c.target_n
        << ", \"iou_threshold\": " << fmt_g9(c.iou_threshold)
        << ", \"scale_step\": " << fmt_g9(c.scale_step)
        << ", \"min_scale\": " << fmt_g9(c.min_scale)
        << ", \"mse_threshold\": " << fmt_g9(c.mse_threshold)
        << ", \"score_floor\": " << fmt_g9(c.score_floor) << "},\n";
    out << "  \"entries\": [";
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        out << (i ? ",\n    " : "\n    ");
        out << "{\"frame_id\": " << json_quote(m.entries[i].frame_id)
            << ", \"difficulty\": " << fmt_g9(m.entries[i].difficulty) << "}";
    }
    out << (m.entries.empty() ? "]\n" : "\n  ]\n");
    out << "}\n";
}

inline void write_manifest_file(const std::string& path, const Manifest& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CullError(Errc::parse_error, "cannot open for writing: " + path);
    write_manifest(out, m);
}

inline Manifest read_manifest(std::istream& in) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(0, std::string("manifest: ") + e.what());
    }
    Manifest m;
    try {
        m.chosen_scale = j.at("chosen_scale").get<double>();
        m.source_count = j.at("source_count").get<std::size_t>();
        m.under_filled = j.value("under_filled", false);
        const json& c = j.at("config");
        m.config_snapshot.q_weight = c.at("q_weight").get<double>();
        m.config_snapshot.b_offset = c.at("b_offset").get<double>();
        m.config_snapshot.stage1_keep = c.at("stage1_keep").get<std::size_t>();
        m.config_snapshot.target_n = c.at("target_n").get<std::size_t>();
        m.config_snapshot.iou_threshold = c.at("iou_threshold").get<double>();
        m.config_snapshot.scale_step = c.at("scale_step").get<double>();
        m.config_snapshot.min_scale = c.at("min_scale").get<double>();
        m.config_snapshot.mse_threshold = c.at("mse_threshold").get<double>();
        m.config_snapshot.score_floor = c.at("score_floor").get<double>();
        for (const json& e : j.at("entries"))
            m.entries.push_back(
                {e.at("frame_id").get<std::string>(), e.at("difficulty").get<double>()});
    } catch (const json::exception& e) {
        throw ParseError(0, std::string("manifest: ") + e.what());
    }
    return m;
}

inline Manifest read_manifest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CullError(Errc::parse_error, "cannot open manifest: " + path);
    return read_manifest(in);
}

// ---------------------------------------------------------------------
// config file: JSON object mirroring CullConfig field names; any subset

struct ConfigOverlay {
    std::optional<double> q_weight, b_offset, iou_threshold, scale_step, min_scale,
        mse_threshold, score_floor;
    std::optional<std::size_t> stage1_keep, target_n;

    void apply(CullConfig& c) const {
        if (q_weight) c.q_weight = *q_weight;
        if (b_offset) c.b_offset = *b_offset;
        if (stage1_keep) c.stage1_keep = *stage1_keep;
        if (target_n) c.target_n = *target_n;
        if (iou_threshold) c.iou_threshold = *iou_threshold;
        if (scale_step) c.scale_step = *scale_step;
        if (min_scale) c.min_scale = *min_scale;
        if (mse_threshold) c.mse_threshold = *mse_threshold;
        if (score_floor) c.score_floor = *score_floor;
    }
};

inline ConfigOverlay overlay_from_json(const json& j) {
    if (!j.is_object())
        throw ParseError(0, "config must be a JSON object");
    ConfigOverlay o;
    try {
        if (j.contains("q_weight")) o.q_weight = j.at("q_weight").get<double>();
        if (j.contains("b_offset")) o.b_offset = j.at("b_offset").get<double>();
        if (j.contains("stage1_keep")) o.stage1_keep = j.at("stage1_keep").get<std::size_t>();
        if (j.contains("target_n")) o.target_n = j.at("target_n").get<std::size_t>();
        if (j.contains("iou_threshold")) o.iou_threshold = j.at("iou_threshold").get<double>();
        if (j.contains("scale_step")) o.scale_step = j.at("scale_step").get<double>();
        if (j.contains("min_scale")) o.min_scale = j.at("min_scale").get<double>();
        if (j.contains("mse_threshold")) o.mse_threshold = j.at("mse_threshold").get<double>();
        if (j.contains("score_floor")) o.score_floor = j.at("score_floor").get<double>();
    } catch (const json::exception& e) {
        throw ParseError(0, std::string("config: ") + e.what());
    }
    return o;
}

inline ConfigOverlay read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CullError(Errc::parse_error, "cannot open config: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(0, path + ": " + e.what());
    }
    return overlay_from_json(j);
}

// cost profile: {"student_infer_per_image":h, "teacher_infer_per_image":h,
//                "student_train_per_image_epoch":h, "epochs":k}
inline CostParams cost_params_from_json(const json& j) {
    CostParams p;
    try {
        p.student_infer_per_image = j.value("student_infer_per_image", 0.0);
        p.teacher_infer_per_image = j.value("teacher_infer_per_image", 0.0);
        p.student_train_per_image_epoch = j.value("student_train_per_image_epoch", 0.0);
        p.epochs = j.value("epochs", 1);
    } catch (const json::exception& e) {
        throw ParseError(0, std::string("cost profile: ") + e.what());
    }
    return p;
}

inline CostParams read_cost_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CullError(Errc::parse_error, "cannot open cost profile: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(0, path + ": " + e.what());
    }
    return cost_params_from_json(j);
}

// ---------------------------------------------------------------------
// COCO-style result arrays: [{image_id, category_id, bbox, score}, ...]

inline std::vector<FrameDetections> parse_coco_results(
    const json& results,
    const std::unordered_map<std::int64_t, std::string>& frame_id_of_image,
    Source source = Source::Student) {
    if (!results.is_array())
        throw ParseError(0, "COCO results must be a JSON array");
    std::vector<FrameDetections> frames;
    std::unordered_map<std::string, std::size_t> index;
    for (const json& r : results) {
        std::int64_t image_id = 0;
        Detection d;
        try {
            image_id = r.at("image_id").get<std::int64_t>();
            d.class_id = r.at("category_id").get<int>();
            const json& bb = r.at("bbox");
            if (!bb.is_array() || bb.size() != 4)
                throw ParseError(0, "COCO bbox must be [x,y,w,h]");
            d.bbox = {bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(),
                      bb[3].get<double>()};
            d.score = r.at("score").get<double>();
        } catch (const json::exception& e) {
            throw ParseError(0, std::string("COCO result: ") + e.what());
        }
        auto mapped = frame_id_of_image.find(image_id);
        if (mapped == frame_id_of_image.end())
            throw CullError(Errc::unknown_image_id,
                            "image_id " + std::to_string(image_id) + " has no frame mapping");
        auto [it, fresh] = index.try_emplace(mapped->second, frames.size());
        if (fresh) {
            FrameDetections f;
            f.frame_id = mapped->second;
            f.source = source;
            f.scale = 1.0;
            frames.push_back(std::move(f));
        }
        frames[it->second].detections.push_back(d);
    }
    for (auto& f : frames) f = validate_frame(std::move(f));
    return frames;
}

// ---------------------------------------------------------------------
// CSV outputs (fixed header rows)

inline void write_scores_csv(std::ostream& out,
                             const std::vector<FrameScore>& scores) {
    out << "frame_id,difficulty\n";
    for (const auto& [id, difficulty] : scores)
        out << id << ',' << fmt_g9(difficulty) << '\n';
}

inline void write_mse_csv(std::ostream& out, const ScaleSweep& sweep) {
    out << "scale,mse\n";
    for (std::size_t k = 0; k < sweep.scales.size(); ++k)
        out << fmt_g9(sweep.scales[k]) << ',' << fmt_g9(sweep.mse_per_scale[k]) << '\n';
}

} // namespace cullforge
