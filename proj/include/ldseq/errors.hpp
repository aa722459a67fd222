#pragma once

#include <stdexcept>
#include <string>

namespace ldseq {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input document (schedule file, trace CSV, numeric literal).
struct parse_error : error {
    using error::error;
};

// Pull/peek past what a source can produce, or a cache cap was hit.
struct schedule_error : error {
    using error::error;
};

// Comparison of incomparable values (NaN).
struct numeric_error : error {
    using error::error;
};

// Instance exceeds a hard size limit (oracle support/horizon, rotor period).
struct limit_error : error {
    using error::error;
};

} // namespace ldseq
