// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dc {

// Every failure the library reports carries one of these codes so callers
// (and tests) can tell failure classes apart without parsing messages.
enum class errc {
    shape_mismatch,   // tensor extents disagree
    divisibility,     // a stride/kernel does not divide the token count
    grid_mismatch,    // token grid inconsistent with token count
    bad_magic,        // container file does not start with the expected magic
    bad_version,      // container version unknown
    truncated,        // container file ends early
    non_finite,       // NaN/Inf where finite values are required
    bad_state,        // operation needs state that was not retained
    bad_config,       // invalid connector/task configuration
    out_of_bounds,    // index outside the valid range
    bad_argument,     // scalar argument outside its domain
    diverged,         // optimization blew up
};

const char* errc_name(errc c);

class error : public std::runtime_error {
  public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const { return code_; }

  private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) {
    throw error(code, what);
}

}  // namespace dc
