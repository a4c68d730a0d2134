#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "blocktri/core.hpp"
#include "blocktri/errors.hpp"

namespace blocktri {

namespace detail {
inline std::atomic<int>& batch_thread_setting() {
    static std::atomic<int> threads{0};
    return threads;
}

inline int default_batch_threads() {
    int hw = 1;
#ifdef _OPENMP
    hw = omp_get_max_threads();
#else
    hw = static_cast<int>(std::thread::hardware_concurrency());
#endif
    if (const char* env = std::getenv("BLOCKTRI_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1) return cap;
        } catch (const std::exception&) {
            // ignore malformed values
        }
    }
    return hw > 0 ? hw : 1;
}
} // namespace detail

/// Number of threads batched kernels may use. 0 restores the default
/// (BLOCKTRI_THREADS when set, otherwise the OpenMP/hardware maximum).
inline void set_batch_threads(int threads) { detail::batch_thread_setting() = threads < 0 ? 0 : threads; }

inline int batch_threads() {
    const int t = detail::batch_thread_setting();
    return t > 0 ? t : detail::default_batch_threads();
}

/// Runs `fn(k)` for k in [0, count), member-parallel when more than one
/// thread is allowed. Every member runs even if another fails; afterwards
/// the error of the lowest failing member is rethrown, with the member
/// index attached.
template <typename Fn>
void for_each_member(Index count, Fn&& fn) {
    Index failed = std::numeric_limits<Index>::max();
    std::exception_ptr error;
    std::mutex guard;
    [[maybe_unused]] const int threads = batch_threads();

#pragma omp parallel for num_threads(threads) if (threads > 1 && count > 1) schedule(static)
    for (Index k = 0; k < count; ++k) {
        try {
            fn(k);
        } catch (...) {
            std::lock_guard lock(guard);
            if (k < failed) {
                failed = k;
                error = std::current_exception();
            }
        }
    }

    if (!error) return;
    try {
        std::rethrow_exception(error);
    } catch (const NotPositiveDefinite& e) {
        throw e.at_member(failed);
    } catch (const BatchMemberError&) {
        throw;
    } catch (const std::exception& e) {
        throw BatchMemberError(failed, e.what());
    }
}

} // namespace blocktri
