#pragma once
//
// Project     : mixedls
// Module      : mixedls/errors.hpp
// Description : exception types shared across the library
//

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mixedls {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct dimension_error : error {
    using error::error;
};

struct invalid_input : error {
    using error::error;
};

// A triangular solve hit an exactly zero pivot; `index` is the offending
// diagonal position. For GRQ/GQR-based solvers this signals a violated
// rank assumption.
struct singular_triangular : error {
    singular_triangular(const std::string& what, std::size_t idx)
        : error(what + " (diagonal index " + std::to_string(idx) + ")"), index(idx) {}
    std::size_t index;
};

struct io_error : error {
    using error::error;
};

struct parse_error : error {
    parse_error(const std::string& what, std::size_t line_no)
        : error(what + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
    std::size_t line;
};

struct spectrum_mismatch : error {
    spectrum_mismatch(const std::string& what, double offending)
        : error(what + " (eigenvalue " + std::to_string(offending) + ")"), value(offending) {}
    double value;
};

} // namespace mixedls
