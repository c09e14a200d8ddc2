// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#include "dc/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dc {

std::size_t worker_count(std::size_t items) {
    if (items <= 1) {
        return items;
    }
    std::size_t cap;
    if (const char* env = std::getenv("DC_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        cap = (end == env) ? 1 : static_cast<std::size_t>(v);
        if (cap == 0) {
            cap = 1;  // 0 = serial
        }
    } else {
        cap = std::thread::hardware_concurrency();
        if (cap == 0) {
            cap = 1;
        }
    }
    return std::min(cap, items);
}

void parallel_for(std::size_t items, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = worker_count(items);
    if (workers <= 1) {
        for (std::size_t i = 0; i < items; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    std::size_t first_error_index = items;
    auto run = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= items) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (i < first_error_index) {
                    first_error_index = i;
                    first_error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back(run);
    }
    for (auto& t : pool) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

}  // namespace dc
