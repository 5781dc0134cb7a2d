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

#include "rpres/parallel.hpp"

#include <cstdlib>
#include <string>

namespace rpres {

namespace {

unsigned initial_thread_count() {
    if (const char* env = std::getenv("RPRES_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<unsigned>& thread_cap() {
    static std::atomic<unsigned> cap{initial_thread_count()};
    return cap;
}

}  // namespace

unsigned default_thread_count() { return thread_cap().load(); }

void set_default_thread_count(unsigned threads) {
    thread_cap().store(threads == 0 ? initial_thread_count() : threads);
}

}  // namespace rpres
