#pragma once

#include <algorithm>
#include <atomic>
#include <concepts>
#include <cstddef>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "cullforge/core.hpp"

namespace cullforge {

// Anything that can produce detections for a frame at a resolution scale.
// Implementations must be deterministic in (frame_id, scale), report boxes
// in full-resolution coordinates, and be const-callable from several
// threads at once.
template <typename A>
concept DetectorAdapter = requires(const A& a, const std::string& id, double scale) {
    { a.detect(id, scale) } -> std::same_as<FrameDetections>;
};

// Wraps an adapter and counts detect() calls. The pipeline's cost story
// rests on how often the teacher runs, so tests pin these counts exactly.
template <DetectorAdapter A>
class CountingAdapter {
public:
    explicit CountingAdapter(const A& inner) : inner_(&inner) {}

    FrameDetections detect(const std::string& frame_id, double scale) const {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return inner_->detect(frame_id, scale);
    }

    std::size_t calls() const { return calls_.load(std::memory_order_relaxed); }
    void reset() { calls_.store(0, std::memory_order_relaxed); }

private:
    const A* inner_;
    mutable std::atomic<std::size_t> calls_{0};
};

// Runs fn(i) for i in [0, n) across `threads` workers on contiguous index
// ranges. Output written by index stays deterministic regardless of the
// schedule; threads <= 1 degrades to a plain loop. The lowest-index
// exception wins when workers throw, mirroring serial behaviour.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(threads, n));
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([begin, end, w, &fn, &errors] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
}

} // namespace cullforge
