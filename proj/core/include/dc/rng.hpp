// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace dc {

// Deterministic generator used for every random value in the library:
// splitmix64 expands the user seed into the xoshiro256** state, and uniform
// doubles come from the top 53 bits. The sequence is part of the documented
// behaviour — ports in other languages must reproduce it bit for bit.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // uniform in [0, 1)
    double next_double();

    // uniform in [lo, hi)
    double uniform(double lo, double hi);

    // derives an independent stream, e.g. one per batch element
    Rng fork(std::uint64_t stream) const;

  private:
    std::uint64_t state_[4];
    std::uint64_t seed_;
};

}  // namespace dc
