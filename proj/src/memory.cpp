#include "romcut/memory.hpp"

#include <malloc.h>

#include <atomic>
#include <cerrno>
#include <cstdlib>

// glibc allocator entry points; the wrappers below interpose the public ones.
extern "C" {
void* __libc_malloc(std::size_t);
void* __libc_calloc(std::size_t, std::size_t);
void* __libc_realloc(void*, std::size_t);
void* __libc_memalign(std::size_t, std::size_t);
void __libc_free(void*);
}

namespace {

std::atomic<long long> g_current{0};
std::atomic<long long> g_peak{0};

void grow(void* p) {
    if (!p) return;
    const long long now = g_current.fetch_add(static_cast<long long>(malloc_usable_size(p))) +
                          static_cast<long long>(malloc_usable_size(p));
    long long prev = g_peak.load(std::memory_order_relaxed);
    while (now > prev && !g_peak.compare_exchange_weak(prev, now, std::memory_order_relaxed)) {
    }
}

void shrink(void* p) {
    if (p) g_current.fetch_sub(static_cast<long long>(malloc_usable_size(p)));
}

}  // namespace

extern "C" {

void* malloc(std::size_t n) {
    void* p = __libc_malloc(n);
    grow(p);
    return p;
}

void* calloc(std::size_t n, std::size_t s) {
    void* p = __libc_calloc(n, s);
    grow(p);
    return p;
}

void* realloc(void* old, std::size_t n) {
    shrink(old);
    void* p = __libc_realloc(old, n);
    if (p)
        grow(p);
    else if (old && n != 0)
        grow(old);
    return p;
}

void free(void* p) {
    shrink(p);
    __libc_free(p);
}

void* memalign(std::size_t a, std::size_t n) {
    void* p = __libc_memalign(a, n);
    grow(p);
    return p;
}

void* aligned_alloc(std::size_t a, std::size_t n) { return memalign(a, n); }

int posix_memalign(void** out, std::size_t a, std::size_t n) {
    void* p = memalign(a, n);
    if (!p) return ENOMEM;
    *out = p;
    return 0;
}

}  // extern "C"

namespace romcut::memory {

std::size_t current() {
    const long long c = g_current.load();
    return c > 0 ? static_cast<std::size_t>(c) : 0;
}

std::size_t peak() {
    const long long c = g_peak.load();
    return c > 0 ? static_cast<std::size_t>(c) : 0;
}

void reset_peak() { g_peak.store(g_current.load()); }

}  // namespace romcut::memory
