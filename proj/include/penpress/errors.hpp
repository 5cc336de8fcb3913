#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace penpress {

// Failure while reading a line-oriented text document. line() is 1-based;
// 0 means the problem concerns the document as a whole (e.g. a missing key).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t line)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                      : message),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Nonlinear or linear least-squares failure. Carries the residual norm of the
// last accepted iterate so callers can report how far the fit got.
class FitError : public std::runtime_error {
public:
    explicit FitError(const std::string& message, double residual_norm = 0.0,
                      int iterations = 0)
        : std::runtime_error(message),
          residual_norm_(residual_norm),
          iterations_(iterations) {}

    double residual_norm() const noexcept { return residual_norm_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_norm_;
    int iterations_;
};

}  // namespace penpress
