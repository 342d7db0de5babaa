#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace irattn {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape or extent mismatch between operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Non-finite value where a finite one is required.
class ValueError : public Error {
public:
    using Error::Error;
};

// Operation received an empty list where at least one element is required.
class EmptyInputError : public Error {
public:
    using Error::Error;
};

// A softmax row whose allowed-key set is empty.
class FullyMaskedRowError : public Error {
public:
    explicit FullyMaskedRowError(std::size_t row)
        : Error("row " + std::to_string(row) + " has no allowed entries"), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

// Mask resolutions that do not divide evenly.
class ResolutionError : public Error {
public:
    using Error::Error;
};

// A subject mask that is (or became) empty.
class DegenerateSubjectError : public Error {
public:
    using Error::Error;
};

// Inconsistent problem setup (counts, rates, variants).
class ConfigurationError : public Error {
public:
    using Error::Error;
};

// A bounding box that does not fit its grid.
class GeometryError : public Error {
public:
    using Error::Error;
};

// Malformed container or mask file; offset points at the offending byte.
class FormatError : public Error {
public:
    FormatError(const std::string& message, std::size_t offset)
        : Error(message + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace irattn
