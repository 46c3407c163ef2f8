#pragma once

#include <stdexcept>
#include <string>

namespace cullforge {

// Machine-checkable failure categories. `data` errors map to CLI exit
// code 2, `usage` to 1, anything else escaping to 3.
enum class Errc {
    invalid_box,
    invalid_score,
    empty_frame_id,
    invalid_scale,
    invalid_config,
    domain_error,
    duplicate_frame_id,
    empty_class_set,
    frame_id_mismatch,
    missing_teacher_frame,
    missing_detections,
    empty_stream,
    too_few_frames,
    length_mismatch,
    division_by_zero,
    parse_error,
    unknown_image_id,
};

class CullError : public std::runtime_error {
public:
    CullError(Errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

// Parse failures carry the 1-based input line number (0 = not line based).
class ParseError : public CullError {
public:
    ParseError(std::size_t line, const std::string& reason)
        : CullError(Errc::parse_error,
                    line > 0 ? "line " + std::to_string(line) + ": " + reason
                             : reason),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace cullforge
