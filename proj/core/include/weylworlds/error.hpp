#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace weylworlds {

// Base of every error the library throws. Callers that only care about
// "something went wrong in the simulator" catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Operation is defined only for some configuration-space dimensions
// (e.g. the Weyl one-form solution divides by n - 2).
class UnsupportedDimension : public Error {
public:
    using Error::Error;
};

// A world, loop vertex or path point sits in (or its stencil reaches) a cell
// where the density is below the node floor.
class NodeProximityError : public Error {
public:
    explicit NodeProximityError(const std::string& what,
                                std::optional<std::size_t> world = std::nullopt)
        : Error(what), world_(world) {}

    std::optional<std::size_t> world() const { return world_; }

private:
    std::optional<std::size_t> world_;
};

class DegenerateSpacing : public Error {
public:
    using Error::Error;
};

class NonQuantizedCirculation : public Error {
public:
    NonQuantizedCirculation(const std::string& what, double defect)
        : Error(what), defect_(defect) {}

    double defect() const { return defect_; }

private:
    double defect_;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class DomainTooSmall : public Error {
public:
    using Error::Error;
};

class InvariantViolation : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace weylworlds
