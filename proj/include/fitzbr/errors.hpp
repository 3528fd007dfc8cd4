#ifndef FITZBR_ERRORS_HPP
#define FITZBR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fitzbr {

// A stated precondition of an operation does not hold (CLI exit code 3).
struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

// An inner solver ran out of budget or could not certify its target
// (CLI exit code 4).
struct SolverFailure : std::runtime_error {
    explicit SolverFailure(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fitzbr

#endif
