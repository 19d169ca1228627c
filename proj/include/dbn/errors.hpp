#pragma once

#include <stdexcept>
#include <string>

namespace dbn {

// Input files or text that cannot be parsed (bad token, wrong column count, ...).
struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values or other numeric breakdowns detected at runtime.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failures (missing file, unwritable directory, truncated stream).
struct io_error : std::runtime_error {
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace dbn
