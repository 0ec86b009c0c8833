#pragma once

#include <stdexcept>
#include <string>

namespace tnkf {

/// Index outside the dimensions of a tensor.
class BoundsError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Operands whose shapes, orders, ranks or batch sizes do not conform.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A dense object larger than kDenseSizeGuard was requested.
class SizeGuardError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Invalid numeric parameters (negative tolerances, nonpositive variances, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Innovation variance lost positivity; the covariance representation is corrupt.
class CovarianceError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace tnkf
