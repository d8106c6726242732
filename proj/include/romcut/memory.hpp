#pragma once

#include <cstddef>

namespace romcut::memory {

/// Heap bytes currently held by the process (malloc-level accounting).
std::size_t current();
/// High-water mark since the last reset_peak().
std::size_t peak();
void reset_peak();

/// Peak heap growth over a scope, relative to its start.
class PeakScope {
public:
    PeakScope() : base_(current()) { reset_peak(); }
    [[nodiscard]] std::size_t bytes() const {
        const std::size_t p = peak();
        return p > base_ ? p - base_ : 0;
    }

private:
    std::size_t base_;
};

}  // namespace romcut::memory
