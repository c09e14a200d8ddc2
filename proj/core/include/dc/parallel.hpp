// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace dc {

// Worker count for parallel_for: DC_THREADS caps concurrency (0 or 1 means
// serial); unset falls back to hardware_concurrency. Always <= items.
std::size_t worker_count(std::size_t items);

// Runs fn(i) for i in [0, items). Each index writes only its own slot, so
// results do not depend on the schedule. Exceptions are rethrown on the
// calling thread (first index wins).
void parallel_for(std::size_t items, const std::function<void(std::size_t)>& fn);

}  // namespace dc
