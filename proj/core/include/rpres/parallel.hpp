// Copyright 2026 The rpres Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rpres {

/// Worker cap used when an operation is called with threads = 0. Initialized
/// from RPRES_THREADS, else hardware concurrency.
unsigned default_thread_count();
void set_default_thread_count(unsigned threads);

/// Splits [0, n) into fixed-size chunks and calls fn(chunk, begin, end) for
/// each, spread over up to `threads` workers. Chunk boundaries depend only on
/// n and chunk_size, so callers that merge per-chunk results in chunk order
/// get results independent of the thread count.
template <class Fn>
void for_each_chunk(std::size_t n, std::size_t chunk_size, unsigned threads, Fn&& fn) {
    if (n == 0) return;
    const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
    if (threads == 0) threads = default_thread_count();
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
    auto run = [&](std::size_t c) {
        const std::size_t begin = c * chunk_size;
        fn(c, begin, std::min(n, begin + chunk_size));
    };
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t c = next++; c < chunks; c = next++) {
                try {
                    run(c);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace rpres
