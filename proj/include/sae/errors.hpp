#pragma once

#include <stdexcept>
#include <string>

namespace sae {

/// Base class for every numerical failure raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed argument: wrong shape, non-finite entry, out-of-range rank, ...
class invalid_input : public error {
public:
    using error::error;
};

/// X'X + S is singular or numerically indefinite.
class ill_posed_penalty : public error {
public:
    using error::error;
};

/// A contingency table has an empty row or column.
class degenerate_margin : public error {
public:
    using error::error;
};

namespace detail {

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw invalid_input(message);
    }
}

} // namespace detail
} // namespace sae
