#pragma once

#include <stdexcept>
#include <string>

namespace serialtrack {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures (CLI exit code 3).
class SingularTransform : public Error {
public:
    explicit SingularTransform(const std::string& what) : Error(what) {}
};

class NonConvergent : public Error {
public:
    NonConvergent(const std::string& what, double residual)
        : Error(what), max_residual(residual) {}
    double max_residual;
};

class DegenerateConfiguration : public Error {
public:
    explicit DegenerateConfiguration(const std::string& what) : Error(what) {}
};

class NoConsensus : public Error {
public:
    NoConsensus(const std::string& what, double best_fraction)
        : Error(what), best_inlier_fraction(best_fraction) {}
    double best_inlier_fraction;
};

class IllConditioned : public Error {
public:
    explicit IllConditioned(const std::string& what) : Error(what) {}
};

class InfeasiblePlacement : public Error {
public:
    explicit InfeasiblePlacement(const std::string& what) : Error(what) {}
};

// Input errors (CLI exit code 2).
class InvalidPair : public Error {
public:
    explicit InvalidPair(const std::string& what) : Error(what) {}
};

class MissingInput : public Error {
public:
    explicit MissingInput(const std::string& what) : Error(what) {}
};

class MalformedLine : public Error {
public:
    MalformedLine(std::size_t line_number, const std::string& reason)
        : Error("line " + std::to_string(line_number) + ": " + reason),
          line(line_number) {}
    std::size_t line;
};

class NonPositiveSize : public MalformedLine {
public:
    NonPositiveSize(std::size_t line_number, const std::string& reason)
        : MalformedLine(line_number, reason) {}
};

class DegenerateGeometry : public Error {
public:
    explicit DegenerateGeometry(const std::string& what) : Error(what) {}
};

// Inconsistencies between otherwise valid inputs (CLI exit code 4).
class MissingTransform : public Error {
public:
    explicit MissingTransform(const std::string& what) : Error(what) {}
};

class InconsistentStack : public Error {
public:
    explicit InconsistentStack(const std::string& what) : Error(what) {}
};

class FrameMismatch : public Error {
public:
    explicit FrameMismatch(const std::string& what) : Error(what) {}
};

}  // namespace serialtrack
