#pragma once

#include <stdexcept>
#include <string>

namespace agestruct {

// Input document is missing a field or a field has the wrong JSON type.
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Well-formed input that violates a model or numerical constraint.
class DomainError : public std::runtime_error {
public:
    DomainError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Raised by a solver mid-run (non-finite values, positivity bound, non-convergence).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConvergenceError : public SolverError {
public:
    ConvergenceError(const std::string& what, double last_residual, int iterations)
        : SolverError(what), last_residual_(last_residual), iterations_(iterations) {}
    double last_residual() const noexcept { return last_residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double last_residual_;
    int iterations_;
};

}  // namespace agestruct
