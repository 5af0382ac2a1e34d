#pragma once

#include <stdexcept>
#include <string>

namespace fracshape {

/// An iterative solve stopped before reaching its tolerance.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A size guard (dense assembly, exhaustive enumeration) was exceeded.
struct GuardError : std::length_error {
    using std::length_error::length_error;
};

}  // namespace fracshape
