#pragma once

#include <stdexcept>

namespace mpsqnn {

// Shape or width mismatch between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Invalid argument value (out-of-range index, bad config field).
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numeric precondition violated (e.g. a generator that is not Hermitian).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/Inf or other numeric breakdown detected mid-computation.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mpsqnn
