#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tradediff {

/// Base class of every domain error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonPositivePrice : public Error {
public:
    using Error::Error;
};

class DivergentIndex : public Error {
public:
    using Error::Error;
};

class NegativeInvestment : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    NoConvergence(std::size_t iterations, double residual, std::string worst, std::string context = {});
    std::size_t iterations() const { return iterations_; }
    double residual() const { return residual_; }
    const std::string& worst_cell() const { return worst_; }

private:
    std::size_t iterations_;
    double residual_;
    std::string worst_;
};

class UnbalancedFlows : public Error {
public:
    using Error::Error;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

class InfeasibleTarget : public Error {
public:
    InfeasibleTarget(std::string message, std::vector<std::string> cells);
    const std::vector<std::string>& cells() const { return cells_; }

private:
    std::vector<std::string> cells_;
};

class MissingCell : public Error {
public:
    using Error::Error;
};

class DegenerateMarginals : public Error {
public:
    using Error::Error;
};

class UnknownRegion : public Error {
public:
    using Error::Error;
};

class ZeroBaseline : public Error {
public:
    using Error::Error;
};

class IoFailure : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class InvalidEconomy : public Error {
public:
    using Error::Error;
};

}  // namespace tradediff
