#include "redforge/parallel.hpp"

#include <cstdlib>
#include <string>

namespace redforge {
namespace {

std::size_t initial_limit() {
    if (const char* env = std::getenv("REDFORGE_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (...) {
        }
    }
    return 0;
}

std::atomic<std::size_t> g_limit{initial_limit()};

}  // namespace

void set_thread_limit(std::size_t n) { g_limit.store(n); }

std::size_t thread_limit() {
    const std::size_t v = g_limit.load();
    if (v != 0) return v;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace redforge
