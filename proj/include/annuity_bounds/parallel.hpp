#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace annuity_bounds {

/// Worker count: explicit request, else ANNUITY_BOUNDS_THREADS, else hardware concurrency.
inline unsigned resolve_threads(int requested = 0) {
	if (requested > 0) return static_cast<unsigned>(requested);
	if (const char *env = std::getenv("ANNUITY_BOUNDS_THREADS")) {
		try {
			const int v = std::stoi(env);
			if (v > 0) return static_cast<unsigned>(v);
		} catch (...) {
		}
	}
	return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, count) on a small pool; the first exception is rethrown.
template <class F>
void parallel_for(std::size_t count, F &&fn, int threads = 0) {
	const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), count));
	if (workers <= 1) {
		for (std::size_t i = 0; i < count; ++i) fn(i);
		return;
	}
	std::atomic<std::size_t> next{0};
	std::exception_ptr failure;
	std::mutex failure_mutex;
	std::vector<std::thread> pool;
	pool.reserve(workers);
	for (unsigned w = 0; w < workers; ++w) {
		pool.emplace_back([&] {
			for (std::size_t i = next++; i < count; i = next++) {
				try {
					fn(i);
				} catch (...) {
					std::lock_guard lock(failure_mutex);
					if (!failure) failure = std::current_exception();
					next = count;
				}
			}
		});
	}
	for (auto &t : pool) t.join();
	if (failure) std::rethrow_exception(failure);
}

} // namespace annuity_bounds
