#pragma once

#include <stdexcept>
#include <string>

namespace mfl {

enum class ErrorKind {
    invalid_coefficients,
    invalid_distribution,
    invalid_input,
    numerical_failure,
    config,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct InvalidCoefficients : Error {
    explicit InvalidCoefficients(const std::string& what) : Error(ErrorKind::invalid_coefficients, what) {}
};

struct InvalidDistribution : Error {
    explicit InvalidDistribution(const std::string& what) : Error(ErrorKind::invalid_distribution, what) {}
};

struct InvalidInput : Error {
    explicit InvalidInput(const std::string& what) : Error(ErrorKind::invalid_input, what) {}
};

struct NumericalFailure : Error {
    explicit NumericalFailure(const std::string& what) : Error(ErrorKind::numerical_failure, what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

}  // namespace mfl
