#pragma once

#include <algorithm>
#include <cstddef>
#include <queue>
#include <vector>

namespace cullforge {

// Bounded top-k selector: holds at most k elements, O(log k) per push.
// `Better(a, b)` is the keep-first ordering; the heap top is always the
// weakest kept element, so a full heap rejects anything not better than it.
template <typename T, typename Better>
class TopK {
public:
    explicit TopK(std::size_t k, Better better = Better())
        : k_(k), better_(better), heap_(better) {}

    void push(const T& value) {
        if (k_ == 0) return;
        if (heap_.size() < k_) {
            heap_.push(value);
        } else if (better_(value, heap_.top())) {
            heap_.pop();
            heap_.push(value);
        }
    }

    std::size_t size() const { return heap_.size(); }
    std::size_t limit() const { return k_; }

    // Drains the heap, best first.
    std::vector<T> take_sorted() {
        std::vector<T> out;
        out.reserve(heap_.size());
        while (!heap_.empty()) {
            out.push_back(heap_.top());
            heap_.pop();
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

private:
    std::size_t k_;
    Better better_;
    // priority_queue with Better on top yields the Better-last element,
    // i.e. the current cut line.
    std::priority_queue<T, std::vector<T>, Better> heap_;
};

} // namespace cullforge
