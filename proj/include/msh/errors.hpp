#pragma once

#include <stdexcept>
#include <string>

namespace msh {

/// Operand extents disagree.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// An index (segment, node, edge endpoint) is out of range.
struct IndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

/// A documented precondition was violated by the caller.
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Malformed or missing input data (dataset files, config files).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Training diverged (non-finite loss).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace msh
